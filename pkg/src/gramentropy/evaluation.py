"""Experiment harness: kNN classification, cross-validation, baselines and
synthetic data for the entropy-order study.

All randomness derives from one integer seed.  Each cross-validation run
uses its own stream seeded by ``(seed, run)``, so running the runs in
parallel or serially gives identical results.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
import logging
import math
import os
import warnings

import numpy as np
from scipy.spatial.distance import cdist

from .ceml import Dataset, MetricModel, TrainConfig, train
from .errors import InputError, StratificationError

log = logging.getLogger(__name__)

THREADS_ENV = "GRAMENTROPY_THREADS"


@dataclass
class CVResult:
    mean_error: float
    per_run_errors: list
    runs: int
    folds: int
    method: str = ""
    dataset: str = ""
    config: dict = field(default_factory=dict)

    def to_record(self):
        return {
            "dataset": self.dataset,
            "method": self.method,
            "mean_error": self.mean_error,
            "per_run_errors": list(self.per_run_errors),
            "config": dict(self.config, runs=self.runs, folds=self.folds),
        }


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of the two-class, two-dimensional bimodal dataset.

    Along the horizontal axis each class is a pair of tight modes, and the
    four modes alternate between classes at spacing ``mode_gap``: the classes
    separate perfectly but are multimodal.  Along the vertical axis each
    class is a single Gaussian of spread ``vertical_std`` and the class means
    differ by ``vertical_gap``: unimodal but overlapping.
    """

    n_per_class: int = 100
    mode_count: int = 2
    mode_gap: float = 3.5
    mode_std: float = 0.3
    vertical_gap: float = 1.5
    vertical_std: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if int(self.n_per_class) != self.n_per_class or self.n_per_class < 1:
            raise InputError(f"n_per_class must be a positive integer, got {self.n_per_class!r}")
        if int(self.mode_count) != self.mode_count or self.mode_count < 1:
            raise InputError(f"mode_count must be a positive integer, got {self.mode_count!r}")
        for name in ("mode_gap", "vertical_std"):
            if not getattr(self, name) > 0:
                raise InputError(f"{name} must be positive")
        if self.mode_std < 0 or self.vertical_gap < 0:
            raise InputError("mode_std and vertical_gap must be nonnegative")


def thread_count():
    """Worker threads allowed by ``GRAMENTROPY_THREADS`` (default 1)."""
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def map_ordered(fn, items):
    """``[fn(x) for x in items]``, possibly threaded; output order is input order."""
    items = list(items)
    workers = min(thread_count(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def synth_bimodal(spec=SyntheticSpec()):
    """Sample the horizontal-multimodal / vertical-unimodal two-class dataset."""
    rng = np.random.default_rng(spec.seed)
    total_modes = 2 * spec.mode_count
    # Mode centers alternate classes: class c owns centers c, c+2, c+4, ...
    centers = (np.arange(total_modes) - (total_modes - 1) / 2) * spec.mode_gap
    X, y = [], []
    for c in (0, 1):
        own = centers[c::2]
        pick = rng.integers(0, spec.mode_count, spec.n_per_class)
        horiz = own[pick] + spec.mode_std * rng.standard_normal(spec.n_per_class)
        vert = c * spec.vertical_gap + spec.vertical_std * rng.standard_normal(spec.n_per_class)
        X.append(np.column_stack([horiz, vert]))
        y.append(np.full(spec.n_per_class, c))
    return Dataset(np.vstack(X), np.concatenate(y), name="synth_bimodal")


def standardize(data):
    """Center features and scale them to unit variance.

    Constant features are dropped with a warning.
    """
    X = data.features
    std = X.std(axis=0)
    keep = std > 1e-12 * np.maximum(1.0, np.abs(X).max(axis=0))
    if not np.all(keep):
        dropped = np.flatnonzero(~keep).tolist()
        warnings.warn(f"dropping constant features {dropped}", RuntimeWarning, stacklevel=2)
        log.warning("standardize dropped constant features %s", dropped)
        X, std = X[:, keep], std[keep]
    if X.shape[1] == 0:
        raise InputError("every feature is constant")
    Z = (X - X.mean(axis=0)) / std
    return Dataset(Z, data.labels, data.name)


def _projection_of(metric):
    if metric is None:
        return None
    if isinstance(metric, MetricModel):
        return metric.projection
    return np.asarray(metric, dtype=float)


def knn_classify(train_X, train_labels, test_X, k=4, metric=None):
    """Predict labels by majority vote of the ``k`` nearest training points.

    Distances are Euclidean after projecting through ``metric`` (a
    :class:`MetricModel`, a raw ``(d, p)`` projection, or ``None`` for the
    identity).  Vote ties go to the label with the smallest summed distance,
    then the lowest label id.
    """
    train_X = np.asarray(train_X, dtype=float)
    test_X = np.asarray(test_X, dtype=float)
    train_labels = np.asarray(train_labels)
    if train_X.ndim == 1:
        train_X = train_X[:, None]
    if test_X.ndim == 1:
        test_X = test_X[:, None]
    if train_X.shape[0] == 0:
        raise InputError("empty training set")
    if not 1 <= k <= train_X.shape[0]:
        raise InputError(f"k must lie in [1, {train_X.shape[0]}], got {k}")
    if train_X.shape[1] != test_X.shape[1]:
        raise InputError(f"feature counts differ: {train_X.shape[1]} train vs {test_X.shape[1]} test")
    W = _projection_of(metric)
    if W is not None:
        if W.ndim != 2 or W.shape[0] != train_X.shape[1]:
            raise InputError(f"metric expects {W.shape[0]} features, data has {train_X.shape[1]}")
        train_X, test_X = train_X @ W, test_X @ W
    if test_X.shape[0] == 0:
        return np.empty(0, dtype=train_labels.dtype)
    dist = np.sqrt(cdist(test_X, train_X, "sqeuclidean"))
    nearest = np.argsort(dist, axis=1, kind="stable")[:, :k]
    preds = np.empty(test_X.shape[0], dtype=train_labels.dtype)
    for i, idx in enumerate(nearest):
        labs = train_labels[idx]
        cand = np.unique(labs)
        counts = np.array([np.sum(labs == c) for c in cand])
        sums = np.array([dist[i, idx][labs == c].sum() for c in cand])
        order = np.lexsort((cand, sums, -counts))
        preds[i] = cand[order[0]]
    return preds


def stratified_folds(labels, folds, rng):
    """Assign each sample a fold id so every class is spread evenly (within one sample)."""
    labels = np.asarray(labels)
    assignment = np.empty(labels.shape[0], dtype=int)
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        if idx.size < folds:
            raise StratificationError(f"class {c} has {idx.size} members, fewer than {folds} folds")
        idx = rng.permutation(idx)
        assignment[idx] = np.arange(idx.size) % folds
    return assignment


def run_seed(seed, run):
    return np.random.SeedSequence([int(seed), int(run)])


def _cross_validate(data, fit, folds, runs, k, seed):
    """Shared CV loop.  ``fit(train_data, seed_sequence)`` returns a metric for knn_classify."""
    if folds < 2:
        raise InputError(f"need at least 2 folds, got {folds}")
    if runs < 1:
        raise InputError(f"need at least one run, got {runs}")

    def one_run(r):
        ss = run_seed(seed, r)
        split_ss, fit_ss = ss.spawn(2)
        assignment = stratified_folds(data.labels, folds, np.random.default_rng(split_ss))
        wrong = 0
        for f, child in enumerate(fit_ss.spawn(folds)):
            test = assignment == f
            train_data = data.subset(~test)
            metric = fit(train_data, child)
            pred = knn_classify(train_data.features, train_data.labels, data.features[test], k, metric)
            wrong += int(np.sum(pred != data.labels[test]))
        return wrong / data.n

    errors = map_ordered(one_run, range(runs))
    return CVResult(float(np.mean(errors)), errors, runs, folds, dataset=data.name)


def config_seed(seed_sequence):
    return int(seed_sequence.generate_state(1)[0])


def cross_validate(data, config, folds=2, runs=10, k=4, standardize_features=True):
    """Cross-validated kNN error of CEML-learned metrics.

    Every run reshuffles (seeded by ``config.seed`` and the run index),
    splits the data into stratified folds, and for each fold trains CEML on
    the remaining folds and classifies the held-out one.
    """
    if standardize_features:
        data = standardize(data)

    def fit(train_data, ss):
        model, _ = train(train_data, config.replace(seed=config_seed(ss)))
        return model

    res = _cross_validate(data, fit, folds, runs, k, config.seed)
    res.method = "ceml"
    res.config = {
        "alpha": config.alpha,
        "sigma": config.sigma,
        "p": config.p,
        "k": k,
        "seed": config.seed,
        "step_size": config.step_size,
        "max_iters": config.max_iters,
        "tol": config.tol,
        "truncate_m": config.truncate_m,
    }
    return res


def baseline_euclidean(data, folds=2, runs=10, k=4, seed=0):
    """kNN with the identity metric on standardized features."""
    data = standardize(data)
    res = _cross_validate(data, lambda train_data, ss: None, folds, runs, k, seed)
    res.method = "euclidean"
    res.config = {"k": k, "seed": seed}
    return res


def inverse_covariance_projection(X):
    """Projection ``W`` with ``W W^T`` equal to the inverse sample covariance.

    A ridge of ``1e-6 * tr(cov) / d`` is added when the covariance is
    singular or ill conditioned.
    """
    X = np.asarray(X, dtype=float)
    d = X.shape[1]
    cov = np.atleast_2d(np.cov(X, rowvar=False))
    lam, U = np.linalg.eigh(cov)
    if lam[0] <= 1e-12 * max(lam[-1], 1e-300):
        cov = cov + 1e-6 * max(np.trace(cov), 1e-12) / d * np.eye(d)
        lam, U = np.linalg.eigh(cov)
    return U / np.sqrt(lam)


def baseline_inverse_covariance(data, folds=2, runs=10, k=4, seed=0):
    """kNN under the Mahalanobis metric of the training-fold covariance."""
    data = standardize(data)
    res = _cross_validate(
        data, lambda train_data, ss: inverse_covariance_projection(train_data.features), folds, runs, k, seed
    )
    res.method = "inverse_covariance"
    res.config = {"k": k, "seed": seed}
    return res


def direction_angle(A):
    """Angle in degrees (0 to 90) between a 2-D direction and the horizontal axis."""
    a = np.asarray(A, dtype=float).ravel()
    if a.shape != (2,):
        raise InputError(f"need a 2x1 projection, got shape {np.shape(A)}")
    if not np.any(a):
        raise InputError("direction of a zero vector is undefined")
    return float(np.degrees(np.arctan2(abs(a[1]), abs(a[0]))))


def direction_label(A):
    return "horizontal" if direction_angle(A) < 45.0 else "vertical"


@dataclass
class AlphaStudyRow:
    alpha: float
    horizontal: int
    vertical: int
    angles: list


#: Bandwidth of the entropy-order study.  It sits where the horizontal
#: minimum is still resolved at low orders but merges away at high orders.
STUDY_SIGMA = 4.8
#: Optimizer settings of the study.  The landscape is flat near its maxima,
#: so a loose objective tolerance would stop runs before they leave them.
STUDY_STEP = 5.0
STUDY_TOL = 1e-10


def alpha_study(alphas=(1.01, 1.3, 2.0, 5.0), repeats=60, seed=0, spec=None, sigma=STUDY_SIGMA,
                step_size=STUDY_STEP, max_iters=300, tol=STUDY_TOL):
    """Count horizontal versus vertical one-dimensional CEML solutions per entropy order.

    Run ``r`` draws a fresh synthetic sample and a fresh initial direction,
    both seeded from ``(seed, r)``; the same seeds are reused for every
    ``alpha`` so orders are compared on identical problems.
    """
    base = spec or SyntheticSpec()

    def one(args):
        alpha, r = args
        data_seed, init_seed = (int(s) for s in run_seed(seed, r).generate_state(2))
        data = synth_bimodal(SyntheticSpec(**{**asdict(base), "seed": data_seed}))
        cfg = TrainConfig(alpha=alpha, sigma=sigma, p=1, step_size=step_size,
                          max_iters=max_iters, tol=tol, seed=init_seed)
        model, _ = train(data, cfg)
        return direction_angle(model.projection)

    rows = []
    for alpha in alphas:
        angles = map_ordered(one, [(alpha, r) for r in range(repeats)])
        h = sum(a < 45.0 for a in angles)
        rows.append(AlphaStudyRow(float(alpha), h, repeats - h, angles))
    return rows
