"""Command-line interface.

Every command prints one JSON document on stdout that embeds a run
manifest (command, configuration, input digests, seed, version and
duration).  Exit codes: 0 success or true, 1 false or tolerance failure,
2 bad input, 3 numerical precondition failure, 4 divergence.
"""

import argparse
import csv
from dataclasses import fields
import json
import logging
import math
import sys
import time

import numpy as np

from . import __version__
from .ceml import TrainConfig, load_model, save_model, train
from .entropy import renyi_entropy
from .errors import (
    DegenerateError,
    DivergenceError,
    GramEntropyError,
    InputError,
    NotPSDError,
    PreconditionError,
)
from .evaluation import (
    SyntheticSpec,
    _cross_validate,
    alpha_study,
    baseline_euclidean,
    baseline_inverse_covariance,
    cross_validate,
    direction_angle,
    direction_label,
    standardize,
    synth_bimodal,
    STUDY_SIGMA,
    STUDY_STEP,
    STUDY_TOL,
)
from .gradcheck import run_gradcheck
from .idkernels import divisibility_report, gaussian_gram
from .io import BUILTIN, RAW_UCI, file_digest, load_dataset, read_matrix_csv, write_dataset_csv

log = logging.getLogger("gramentropy")

EXIT_OK, EXIT_FALSE, EXIT_INPUT, EXIT_PRECONDITION, EXIT_DIVERGENCE = 0, 1, 2, 3, 4


def _exit_code(exc):
    if isinstance(exc, DivergenceError):
        return EXIT_DIVERGENCE
    if isinstance(exc, (NotPSDError, PreconditionError, DegenerateError)):
        return EXIT_PRECONDITION
    # InputError, DomainError, StratificationError, NotHilbertianError
    return EXIT_INPUT


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _float_list(text):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _int_list(text):
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


class Run:
    """Collects the manifest of one command invocation."""

    def __init__(self, args):
        self.command = args.command
        self.config = {k: v for k, v in vars(args).items() if k not in ("command", "func", "verbose")}
        self.inputs = {}
        self.seed = getattr(args, "seed", None)
        self.start = time.perf_counter()

    def add_input(self, path):
        try:
            self.inputs[str(path)] = file_digest(path)
        except OSError as exc:
            raise InputError(f"cannot read {path}: {exc}") from exc

    def add_dataset(self, spec):
        # Builtin names carry no file; "kind:path" specs hash the path part.
        if spec in BUILTIN:
            return
        kind, sep, path = spec.partition(":")
        self.add_input(path if sep and kind in RAW_UCI else spec)

    def manifest(self):
        return {
            "command": self.command,
            "config": self.config,
            "inputs": self.inputs,
            "seed": self.seed,
            "version": __version__,
            "duration_s": time.perf_counter() - self.start,
        }

    def emit(self, payload, path=None):
        doc = dict(payload, manifest=self.manifest())
        text = json.dumps(doc, indent=2, sort_keys=True, default=_jsonable)
        print(text)
        if path:
            with open(path, "w") as fh:
                fh.write(text + "\n")


def cmd_entropy(args, run):
    if (args.gram is None) == (args.features is None):
        raise InputError("give exactly one of --gram or --features")
    if args.gram is not None:
        run.add_input(args.gram)
        K = read_matrix_csv(args.gram)
    else:
        if args.sigma is None:
            raise InputError("--features needs --sigma")
        run.add_input(args.features)
        K = gaussian_gram(read_matrix_csv(args.features), args.sigma)
    S = renyi_entropy(K, args.alpha)
    run.emit({"entropy_bits": S, "n": int(K.shape[0]), "alpha": args.alpha}, args.out)
    return EXIT_OK


def cmd_check_id(args, run):
    run.add_input(args.matrix)
    report = divisibility_report(read_matrix_csv(args.matrix), args.tol, log_domain=args.log_domain)
    payload = {
        "infinitely_divisible": report.infinitely_divisible,
        "worst_eigenvalue": report.worst_eigenvalue,
        "route": report.route,
        "power_min_eigenvalues": {str(r): v for r, v in report.power_min_eigenvalues.items()},
    }
    run.emit(payload, args.out)
    return EXIT_OK if report.infinitely_divisible else EXIT_FALSE


def cmd_gradcheck(args, run):
    report = run_gradcheck(args.seed, args.sizes, args.alphas, args.cases, args.ceml_cases)
    run.emit(report.to_dict(), args.out)
    if not report.passed:
        print(f"gradient check failed, worst cases: {report.worst}", file=sys.stderr)
        return EXIT_FALSE
    return EXIT_OK


def _train_config(args):
    return TrainConfig(
        alpha=args.alpha,
        sigma=args.sigma,
        p=args.p,
        step_size=args.step,
        max_iters=args.max_iters,
        seed=args.seed,
        tol=args.tol,
        truncate_m=args.truncate_m,
    )


def _load(args, run):
    run.add_dataset(args.dataset)
    return load_dataset(args.dataset)


def cmd_train(args, run):
    data = _load(args, run)
    if not args.raw:
        data = standardize(data)
    try:
        model, report = train(data, _train_config(args))
    except DivergenceError as exc:
        run.emit({"error": str(exc), "report": exc.report.to_dict() if exc.report else None}, None)
        raise
    if args.out:
        save_model(model, args.out)
    payload = {"report": report.to_dict(), "model_file": args.out, "projection": model.projection}
    if model.p == 1 and model.d == 2:
        payload["direction_angle"] = direction_angle(model.projection)
        payload["direction"] = direction_label(model.projection)
    run.emit(payload, None)
    return EXIT_OK


def cmd_eval(args, run):
    data = _load(args, run)
    results = []
    if args.model:
        run.add_input(args.model)
        model = load_model(args.model)
        fixed = data if args.raw else standardize(data)
        res = _cross_validate(fixed, lambda train_data, ss: model, args.folds, args.runs, args.k, args.seed)
        res.method = "model"
        res.config = {"k": args.k, "seed": args.seed, "model": args.model}
        results.append(res)
    elif args.method == "ceml":
        results.append(cross_validate(data, _train_config(args), args.folds, args.runs, args.k,
                                      standardize_features=not args.raw))
    elif args.method == "euclidean":
        results.append(baseline_euclidean(data, args.folds, args.runs, args.k, args.seed))
    else:
        results.append(baseline_inverse_covariance(data, args.folds, args.runs, args.k, args.seed))
    if args.compare:
        have = {r.method for r in results}
        if "euclidean" not in have:
            results.append(baseline_euclidean(data, args.folds, args.runs, args.k, args.seed))
        if "inverse_covariance" not in have:
            results.append(baseline_inverse_covariance(data, args.folds, args.runs, args.k, args.seed))
    run.emit({"results": [r.to_record() for r in results]}, args.out)
    return EXIT_OK


def cmd_alpha_study(args, run):
    spec = _synth_spec(args)
    rows = alpha_study(args.alphas, args.repeats, args.seed, spec, args.sigma, args.step, args.max_iters, args.tol)
    table = [{"alpha": r.alpha, "horizontal": r.horizontal, "vertical": r.vertical} for r in rows]
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["alpha", "run", "angle_deg", "direction"])
            for r in rows:
                for i, a in enumerate(r.angles):
                    w.writerow([r.alpha, i, f"{a:.10g}", "horizontal" if a < 45.0 else "vertical"])
    run.emit({"table": table, "repeats": args.repeats, "angles_csv": args.csv}, args.out)
    return EXIT_OK


def _synth_spec(args):
    return SyntheticSpec(
        n_per_class=args.n_per_class,
        mode_count=args.mode_count,
        mode_gap=args.mode_gap,
        mode_std=args.mode_std,
        vertical_gap=args.vertical_gap,
        vertical_std=args.vertical_std,
        seed=args.seed,
    )


def cmd_synth(args, run):
    data = synth_bimodal(_synth_spec(args))
    write_dataset_csv(args.out, data)
    run.emit({"rows": data.n, "path": args.out, "sha256": file_digest(args.out)}, None)
    return EXIT_OK


def _add_train_flags(p, alpha=1.01, sigma=math.sqrt(3.0), dim=3):
    p.add_argument("--alpha", type=float, default=alpha, help="entropy order")
    p.add_argument("--sigma", type=float, default=sigma, help="Gaussian kernel bandwidth")
    p.add_argument("--p", type=int, default=dim, help="projection dimension")
    p.add_argument("--step", type=float, default=0.5, help="initial step size")
    p.add_argument("--max-iters", type=int, default=300)
    p.add_argument("--tol", type=float, default=1e-6, help="stop when the objective improves less")
    p.add_argument("--truncate-m", type=int, default=None, help="use only the top m eigenpairs in gradients")
    p.add_argument("--seed", type=int, default=0)


def _add_synth_flags(p):
    defaults = {f.name: f.default for f in fields(SyntheticSpec)}
    p.add_argument("--n-per-class", type=int, default=defaults["n_per_class"])
    p.add_argument("--mode-count", type=int, default=defaults["mode_count"])
    for name in ("mode_gap", "mode_std", "vertical_gap", "vertical_std"):
        p.add_argument("--" + name.replace("_", "-"), type=float, default=defaults[name])


def build_parser():
    parser = argparse.ArgumentParser(prog="gramentropy", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("entropy", help="Renyi entropy of a Gram matrix")
    p.add_argument("--gram", help="CSV of a unit-trace PSD matrix")
    p.add_argument("--features", help="CSV of feature rows; the Gram matrix is built with --sigma")
    p.add_argument("--sigma", type=float)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--out", help="also write the JSON here")
    p.set_defaults(func=cmd_entropy)

    p = sub.add_parser("check-id", help="test a matrix for infinite divisibility")
    p.add_argument("matrix", help="CSV of a symmetric matrix with positive entries")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--log-domain", action="store_true", help="the CSV holds the elementwise natural log")
    p.add_argument("--out")
    p.set_defaults(func=cmd_check_id)

    p = sub.add_parser("gradcheck", help="finite-difference check of the analytic gradients")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sizes", type=_int_list, default=(2, 5, 16, 40))
    p.add_argument("--alphas", type=_float_list, default=(0.5, 1.01, 2.0, 5.0))
    p.add_argument("--cases", type=int, default=100)
    p.add_argument("--ceml-cases", type=int, default=20)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("train", help="learn a CEML projection")
    p.add_argument("dataset", help="iris, wine, ionosphere:PATH, balance-scale:PATH or a CSV path")
    _add_train_flags(p)
    p.add_argument("--raw", action="store_true", help="skip feature standardization")
    p.add_argument("--out", help="model file to write")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="cross-validated kNN error")
    p.add_argument("dataset")
    p.add_argument("--method", choices=("ceml", "euclidean", "inverse-covariance"), default="ceml")
    p.add_argument("--model", help="evaluate a saved model instead of training per fold")
    _add_train_flags(p)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--folds", type=int, default=2)
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--compare", action="store_true", help="add the Euclidean and inverse-covariance baselines")
    p.add_argument("--raw", action="store_true", help="skip feature standardization")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("alpha-study", help="direction of 1-D solutions versus entropy order")
    p.add_argument("--alphas", type=_float_list, default=(1.01, 1.3, 2.0, 5.0))
    p.add_argument("--repeats", type=int, default=60)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigma", type=float, default=STUDY_SIGMA)
    p.add_argument("--step", type=float, default=STUDY_STEP)
    p.add_argument("--max-iters", type=int, default=300)
    p.add_argument("--tol", type=float, default=STUDY_TOL)
    _add_synth_flags(p)
    p.add_argument("--csv", help="write per-run angles here")
    p.add_argument("--out")
    p.set_defaults(func=cmd_alpha_study)

    p = sub.add_parser("synth", help="write the synthetic bimodal dataset as CSV")
    _add_synth_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        run = Run(args)
        return args.func(args, run)
    except GramEntropyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
