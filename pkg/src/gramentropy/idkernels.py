"""Gram matrices, infinite divisibility and Hilbertian embeddings.

A nonnegative matrix is infinitely divisible when every elementwise power
``A^(o r)``, ``r >= 0``, is PSD.  For matrices with positive entries this is
decided exactly by checking that ``-log(A)`` (elementwise) is conditionally
negative definite; sampled fractional powers can only falsify it and are
reported as a secondary confirmation.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .errors import DomainError, InputError, NotHilbertianError
from .spectra import (
    CLAMP_TOL,
    as_symmetric,
    centered_negdef_check,
    centered_spectrum,
    centering_matrix,
    eig_sym,
    psd_check,
)

#: Fractional Hadamard powers probed by the secondary divisibility route.
PROBE_POWERS = (0.1, 0.25, 0.5, 0.75)
#: Relative threshold defining the numerical rank of an embedding.
RANK_TOL = 1e-9


def check_sigma(sigma):
    sigma = float(sigma)
    if not (sigma > 0 and np.isfinite(sigma)):
        raise InputError(f"kernel bandwidth must be positive, got {sigma!r}")
    return sigma


def as_features(X, name="X"):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] < 1:
        raise InputError(f"{name} must be a non-empty (n, d) array, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise InputError(f"{name} has non-finite entries")
    return X


def sq_distances(X):
    """Pairwise squared Euclidean distances with an exactly zero diagonal."""
    X = as_features(X)
    if X.shape[0] == 1:
        return np.zeros((1, 1))
    return squareform(pdist(X, "sqeuclidean"))


def gaussian_gram(X, sigma):
    """Unit-trace Gaussian Gram matrix.

    ``K_ij = exp(-|x_i - x_j|^2 / (2 sigma^2)) / n``, so ``K_ii = 1/n`` and
    ``n K`` is infinitely divisible.
    """
    sigma = check_sigma(sigma)
    D2 = sq_distances(X)
    n = D2.shape[0]
    return np.exp(-D2 / (2.0 * sigma**2)) / n


def log_gaussian_gram(X, sigma):
    """Elementwise natural log of :func:`gaussian_gram`.

    Exact even where the Gram matrix itself underflows to zero (small
    ``sigma`` or distant points).
    """
    sigma = check_sigma(sigma)
    D2 = sq_distances(X)
    return -D2 / (2.0 * sigma**2) - np.log(D2.shape[0])


def normalize_id(A):
    """Cosine normalization ``A_ij / sqrt(A_ii A_jj)``; the result has unit diagonal."""
    A = as_symmetric(A)
    d = np.diag(A)
    if np.any(d <= 0):
        raise DomainError("normalization requires a strictly positive diagonal")
    s = np.sqrt(d)
    out = A / s[:, None] / s[None, :]
    np.fill_diagonal(out, 1.0)
    return (out + out.T) / 2


@dataclass
class DivisibilityReport:
    infinitely_divisible: bool
    #: Largest eigenvalue of ``J (-log A) J``; nonpositive for divisible matrices.
    worst_eigenvalue: float
    route: str = "log-negdef"
    #: Smallest eigenvalue of each probed Hadamard power, keyed by power.
    power_min_eigenvalues: dict = field(default_factory=dict)
    #: ``psd_check`` verdict of each probed Hadamard power.
    power_flags: dict = field(default_factory=dict)


def divisibility_report(A, tol=1e-10, powers=PROBE_POWERS, log_domain=False):
    """Run both divisibility routes on ``A`` and return the full diagnostics.

    With ``log_domain`` the argument is the elementwise natural log of the
    matrix, which sidesteps underflow (see :func:`log_gaussian_gram`).

    Raises :class:`DomainError` when an entry is nonpositive: such a matrix
    is outside the domain of the log test, which is reported distinctly
    from a negative answer.
    """
    if log_domain:
        logA = as_symmetric(A, "log A")
    else:
        A = as_symmetric(A)
        if np.any(A <= 0):
            raise DomainError("divisibility test requires strictly positive entries")
        logA = np.log(A)
    B = -(logA + logA.T) / 2
    lam = centered_spectrum(B)
    verdict = centered_negdef_check(B, tol)
    mins, flags = {}, {}
    for r in powers:
        P = np.exp(r * logA)
        mins[r] = float(np.linalg.eigvalsh((P + P.T) / 2)[0])
        flags[r] = psd_check(P, tol)
    report = DivisibilityReport(
        infinitely_divisible=verdict,
        worst_eigenvalue=float(lam[-1]),
        power_min_eigenvalues=mins,
        power_flags=flags,
    )
    return report


def is_infinitely_divisible(A, tol=1e-10, log_domain=False):
    """Exact test: ``-log(A)`` is conditionally negative definite.

    Entries that underflow (zero or subnormal) make the stored matrix a poor
    copy of the intended one; pass the exact log with ``log_domain`` then.
    """
    return divisibility_report(A, tol, powers=(), log_domain=log_domain).infinitely_divisible


def powers_psd(A, powers=PROBE_POWERS, tol=1e-10, log_domain=False):
    """Secondary route: every sampled Hadamard power passes :func:`psd_check`."""
    report = divisibility_report(A, tol, powers, log_domain)
    return all(report.power_flags.values())


def _zero_diagonal(D):
    D = (D + D.T) / 2
    np.fill_diagonal(D, 0.0)
    return np.clip(D, 0.0, None)


def negdef_to_distances(B, tol=1e-10):
    """Squared Hilbertian distances ``B_ij - (B_ii + B_jj) / 2`` from a negative definite ``B``."""
    B = as_symmetric(B, "B")
    if not centered_negdef_check(B, tol):
        raise InputError("B is not conditionally negative definite")
    d = np.diag(B)
    return _zero_diagonal(B - (d[:, None] + d[None, :]) / 2)


def posdef_to_distances(A):
    """Distances ``-A_ij + (A_ii + A_jj) / 2`` from a PSD ``A``.

    Equals half the squared feature-space distance ``|phi_i - phi_j|^2``.
    """
    A = as_symmetric(A)
    if not psd_check(A, CLAMP_TOL):
        raise InputError("A is not positive semidefinite")
    d = np.diag(A)
    return _zero_diagonal(-A + (d[:, None] + d[None, :]) / 2)


def double_center(D):
    """Gram matrix ``-J D J / 2`` of points with squared distances ``D``."""
    D = as_symmetric(D, "D")
    J = centering_matrix(D.shape[0])
    G = -0.5 * J @ D @ J
    return (G + G.T) / 2


def embed_from_distances(D, k=None):
    """Classical multidimensional scaling of squared distances.

    Parameters
    ----------
    D : (n, n) array_like
        Squared distances, zero diagonal.
    k : int, optional
        Embedding dimension.  Defaults to the numerical rank of the
        double-centered matrix (eigenvalues above ``1e-9 * lam_max``).
        Extra dimensions beyond the rank are zero.

    Returns
    -------
    (n, k) ndarray
        Coordinates whose squared pairwise distances reproduce ``D``.
    """
    D = as_symmetric(D, "D")
    if np.any(np.abs(np.diag(D)) > 0):
        raise InputError("distance matrix must have a zero diagonal")
    lam, U = eig_sym(double_center(D))
    thr = CLAMP_TOL * max(1.0, float(lam[0]))
    if lam[-1] < -thr:
        raise NotHilbertianError(
            f"double-centered matrix has eigenvalue {lam[-1]:.3e}; distances are not Euclidean"
        )
    rank = int(np.sum(lam > RANK_TOL * max(lam[0], 0.0))) if lam[0] > 0 else 0
    if k is None:
        k = max(rank, 1)
    k = int(k)
    if k < 1:
        raise InputError(f"embedding dimension must be positive, got {k}")
    used = min(k, rank)
    Y = np.zeros((D.shape[0], k))
    Y[:, :used] = U[:, :used] * np.sqrt(lam[:used])
    return Y
