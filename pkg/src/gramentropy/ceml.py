"""Conditional-entropy metric learning (CEML).

Learns a linear projection ``A`` (d x p) with ``tr(A^T A) = p`` minimizing
the matrix conditional entropy of the labels given the projected samples::

    S(L|Y) = S_alpha(n K o L) - S_alpha(K)

where ``K`` is the unit-trace Gaussian Gram matrix of ``y_i = A^T x_i`` and
``L_ij = 1/n`` when samples ``i`` and ``j`` share a label.  The learned
Mahalanobis metric is ``(x - x')^T A A^T (x - x')``.
"""

from dataclasses import dataclass, field
import math
from typing import Optional

import numpy as np

from .entropy import (
    LN2,
    DEGENERATE_TOL,
    GRAD_FLOOR,
    check_order,
    entropy_from_eigenvalues,
)
from .errors import DegenerateError, DivergenceError, InputError, PreconditionError
from .idkernels import as_features, check_sigma, sq_distances
from .spectra import noise_floor

#: Maximum number of step halvings per iteration.
MAX_HALVINGS = 30


@dataclass(frozen=True)
class Dataset:
    """Feature matrix (n x d) with integer class labels."""

    features: np.ndarray
    labels: np.ndarray
    name: str = "data"

    def __post_init__(self):
        X = as_features(self.features, "features")
        y = np.asarray(self.labels)
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise InputError(f"need one label per sample: {y.shape} vs {X.shape[0]} samples")
        if X.shape[0] < 2:
            raise InputError("a dataset needs at least two samples")
        if y.size and not np.all(np.equal(np.mod(y, 1), 0)):
            raise InputError("labels must be integers")
        y = y.astype(np.int64)
        if np.any(y < 0):
            raise InputError("labels must be nonnegative")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def d(self):
        return self.features.shape[1]

    def subset(self, idx):
        return Dataset(self.features[idx], self.labels[idx], self.name)


@dataclass(frozen=True)
class MetricModel:
    """Learned projection ``A`` plus the hyperparameters it was trained with."""

    projection: np.ndarray
    alpha: float
    sigma: float

    def __post_init__(self):
        A = np.asarray(self.projection, dtype=float)
        if A.ndim != 2:
            raise InputError("projection must be a (d, p) matrix")
        if abs(np.sum(A * A) - A.shape[1]) > 1e-8:
            raise InputError("projection must satisfy tr(A^T A) = p")
        A.setflags(write=False)
        object.__setattr__(self, "projection", A)
        object.__setattr__(self, "alpha", check_order(self.alpha))
        object.__setattr__(self, "sigma", check_sigma(self.sigma))

    @property
    def d(self):
        return self.projection.shape[0]

    @property
    def p(self):
        return self.projection.shape[1]


@dataclass(frozen=True)
class TrainConfig:
    alpha: float = 1.01
    sigma: float = math.sqrt(3.0)
    p: int = 3
    step_size: float = 0.5
    max_iters: int = 300
    seed: int = 0
    tol: float = 1e-6
    truncate_m: Optional[int] = None

    def __post_init__(self):
        check_order(self.alpha)
        check_sigma(self.sigma)
        if int(self.p) != self.p or self.p < 1:
            raise InputError(f"p must be a positive integer, got {self.p!r}")
        if not self.step_size > 0:
            raise InputError(f"step size must be positive, got {self.step_size!r}")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise InputError(f"max_iters must be a positive integer, got {self.max_iters!r}")
        if not self.tol > 0:
            raise InputError(f"tol must be positive, got {self.tol!r}")
        if self.truncate_m is not None and (int(self.truncate_m) != self.truncate_m or self.truncate_m < 1):
            raise InputError(f"truncate_m must be a positive integer, got {self.truncate_m!r}")

    def replace(self, **changes):
        return type(self)(**{**self.__dict__, **changes})


@dataclass
class TrainReport:
    objective_trace: list = field(default_factory=list)
    iterations_run: int = 0
    final_objective: float = float("nan")
    converged: bool = False

    def to_dict(self):
        return {
            "objective_trace": list(self.objective_trace),
            "iterations_run": self.iterations_run,
            "final_objective": self.final_objective,
            "converged": self.converged,
        }


def same_label_mask(labels):
    y = np.asarray(labels)
    return (y[:, None] == y[None, :]).astype(float)


def label_gram(labels):
    """Class co-occurrence matrix: ``1/n`` where labels agree, 0 elsewhere."""
    y = np.asarray(labels).ravel()
    if y.size < 1:
        raise InputError("need at least one label")
    return same_label_mask(y) / y.size


def project_trace(A, p=None):
    """Rescale ``A`` so that ``tr(A^T A) = p`` (default: its column count)."""
    A = np.asarray(A, dtype=float)
    if p is None:
        p = A.shape[1]
    fro2 = float(np.sum(A * A))
    if not fro2 > 0 or not math.isfinite(fro2):
        raise DegenerateError("cannot rescale a zero (or non-finite) projection")
    return A * math.sqrt(p / fro2)


def _check_shapes(A, data):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != data.d:
        raise InputError(f"projection shape {A.shape} does not match {data.d} features")
    return A


def _eig_desc(M, m=None):
    lam, U = np.linalg.eigh(M)
    lam, U = lam[::-1], U[:, ::-1]
    thr = 1e-10 * max(1.0, lam[0])
    if lam[-1] < -thr:
        raise DegenerateError(f"Gram matrix has eigenvalue {lam[-1]:.3e}")
    return np.clip(lam, 0.0, None), U


def _spectral_gradient(lam, U, alpha, m=None):
    """Bits-unit gradient of the entropy at ``U diag(lam) U^T``, optionally rank-truncated."""
    power_sum = np.sum(lam[lam > 0] ** alpha)
    if power_sum <= DEGENERATE_TOL:
        raise DegenerateError("tr(A^alpha) vanished")
    floor = noise_floor(lam)
    if m is not None:
        lam, U = lam[:m], U[:, :m]
    if alpha < 1 and lam.min() < GRAD_FLOOR:
        raise PreconditionError("gradient diverges at zero eigenvalues for alpha < 1")
    w = np.zeros_like(lam)
    pos = lam > floor
    w[pos] = lam[pos] ** (alpha - 1.0)
    w *= alpha / ((1.0 - alpha) * power_sum * LN2)
    G = (U * w) @ U.T
    return (G + G.T) / 2


class _Problem:
    """Precomputed pieces of the CEML objective for one dataset."""

    def __init__(self, data, alpha, sigma, truncate_m=None):
        self.X = data.features
        self.mask = same_label_mask(data.labels)
        self.n = data.n
        self.alpha = check_order(alpha)
        self.sigma = check_sigma(sigma)
        self.m = None if truncate_m is None else min(int(truncate_m), self.n)
        # Every pair shares a label: the objective is identically zero.
        self.trivial = bool(np.all(self.mask == 1.0))

    def gram(self, A):
        return np.exp(-sq_distances(self.X @ A) / (2.0 * self.sigma**2)) / self.n

    def objective(self, A):
        if self.trivial:
            return 0.0
        K = self.gram(A)
        lam_joint = np.clip(np.linalg.eigvalsh(K * self.mask), 0.0, None)
        lam_marg = np.clip(np.linalg.eigvalsh(K), 0.0, None)
        return entropy_from_eigenvalues(lam_joint, self.alpha) - entropy_from_eigenvalues(
            lam_marg, self.alpha
        )

    def objective_and_gradient(self, A):
        d, p = A.shape
        if self.trivial:
            return 0.0, np.zeros((d, p))
        K = self.gram(A)
        M = K * self.mask
        lam_j, U_j = _eig_desc(M)
        lam_k, U_k = _eig_desc(K)
        f = entropy_from_eigenvalues(lam_j, self.alpha) - entropy_from_eigenvalues(lam_k, self.alpha)
        G_joint = _spectral_gradient(lam_j, U_j, self.alpha, self.m)
        G_marg = _spectral_gradient(lam_k, U_k, self.alpha, self.m)
        P = (self.mask * G_joint - G_marg) * K
        P = (P + P.T) / 2
        Lap = P - np.diag(P.sum(axis=1))
        X = self.X
        grad = (2.0 / self.sigma**2) * (X.T @ (Lap @ (X @ A)))
        return f, grad


def ceml_objective(A, data, alpha, sigma):
    """Conditional entropy ``S(nK o L) - S(K)`` of labels given ``A``-projected data, in bits."""
    A = _check_shapes(A, data)
    return _Problem(data, alpha, sigma).objective(A)


def ceml_gradient(A, data, alpha, sigma, truncate_m=None):
    """Gradient of :func:`ceml_objective` with respect to ``A``.

    ``(2 / sigma^2) X^T (P - diag(P 1)) X A`` with
    ``P = (n L o grad S(nK o L) - grad S(K)) o K``.  With ``truncate_m``
    the entropy gradients use only the leading ``truncate_m`` eigenpairs.
    """
    A = _check_shapes(A, data)
    return _Problem(data, alpha, sigma, truncate_m).objective_and_gradient(A)[1]


def initial_projection(d, p, seed):
    rng = np.random.default_rng(seed)
    return project_trace(rng.standard_normal((d, p)), p)


def train(data, config):
    """Fit a CEML projection by projected gradient descent.

    Each iteration takes a step of size ``config.step_size`` against the
    gradient, rescales back onto ``tr(A^T A) = p`` and halves the step (up
    to 30 times) until the objective does not increase.  Stops after
    ``max_iters`` iterations, when the objective changes by less than
    ``tol``, or when no step decreases it.

    Returns
    -------
    model : MetricModel
    report : TrainReport
    """
    if not isinstance(config, TrainConfig):
        raise InputError("config must be a TrainConfig")
    if not 1 <= config.p <= data.d:
        raise InputError(f"need 1 <= p <= d, got p={config.p}, d={data.d}")
    problem = _Problem(data, config.alpha, config.sigma, config.truncate_m)
    A = initial_projection(data.d, config.p, config.seed)
    report = TrainReport()

    f, grad = problem.objective_and_gradient(A)
    if not math.isfinite(f):
        raise DivergenceError("objective is not finite at the initial point", report)
    report.objective_trace.append(f)

    for it in range(1, config.max_iters + 1):
        report.iterations_run = it
        if not np.any(grad):
            report.converged = True
            break
        step = config.step_size
        accepted = False
        for _ in range(MAX_HALVINGS + 1):
            candidate = project_trace(A - step * grad, config.p)
            f_new = problem.objective(candidate)
            if not math.isfinite(f_new):
                report.final_objective = f
                raise DivergenceError(f"objective became {f_new} at iteration {it}", report)
            if f_new <= f:
                accepted = True
                break
            step /= 2
        if not accepted:
            report.converged = True
            break
        change = f - f_new
        A = candidate
        f, grad = problem.objective_and_gradient(A)
        report.objective_trace.append(f)
        if change < config.tol:
            report.converged = True
            break

    report.final_objective = f
    model = MetricModel(project_trace(A, config.p), config.alpha, config.sigma)
    return model, report


def transform(model, X):
    """Project rows of ``X`` through the learned ``A``."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :] if X.size else X.reshape(0, model.d)
    if X.ndim != 2 or X.shape[1] != model.d:
        raise InputError(f"expected {model.d} features, got shape {X.shape}")
    return X @ model.projection


def save_model(model, path):
    """Write a model as plain text with 17 significant digits (lossless)."""
    A = model.projection
    lines = [
        "# gramentropy metric model",
        f"d {A.shape[0]}",
        f"p {A.shape[1]}",
        f"alpha {model.alpha:.17g}",
        f"sigma {model.sigma:.17g}",
    ]
    lines += [" ".join(f"{v:.17g}" for v in row) for row in A]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path):
    with open(path) as fh:
        rows = [ln.split() for ln in fh if ln.strip() and not ln.startswith("#")]
    try:
        header = {key: val for key, val in rows[:4]}
        d, p = int(header["d"]), int(header["p"])
        alpha, sigma = float(header["alpha"]), float(header["sigma"])
        A = np.array([[float(v) for v in row] for row in rows[4:]], dtype=float)
    except (KeyError, ValueError, IndexError) as exc:
        raise InputError(f"malformed model file {path}: {exc}") from exc
    if A.shape != (d, p):
        raise InputError(f"model file {path} declares {d}x{p} but holds {A.shape}")
    return MetricModel(A, alpha, sigma)
