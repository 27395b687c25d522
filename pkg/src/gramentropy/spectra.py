"""Dense symmetric-matrix linear algebra.

Eigendecomposition with descending eigenvalues, primary matrix functions,
Hadamard and Kronecker products, positive semidefiniteness and centered
negative-definiteness checks, and vector majorization.

Matrices are plain ``numpy.ndarray`` objects; validation helpers enforce the
symmetry and unit-trace invariants at the boundaries of public functions.
"""

from typing import NamedTuple

import numpy as np

from .errors import DomainError, InputError, NotPSDError

#: Relative symmetry tolerance.
SYM_TOL = 1e-12
#: Relative tolerance below which negative eigenvalues count as roundoff.
CLAMP_TOL = 1e-10
#: Trace and PSD tolerance for density-like (unit trace PSD) matrices.
DENSITY_TOL = 1e-10


class EigenSystem(NamedTuple):
    """Eigenvalues sorted descending with paired eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self):
        U, lam = self.eigenvectors, self.eigenvalues
        return (U * lam) @ U.T


def as_symmetric(A, name="A"):
    """Return ``A`` as a float array after checking it is finite, square and symmetric."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise InputError(f"{name} must be a non-empty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InputError(f"{name} has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(A))))
    if np.max(np.abs(A - A.T)) > SYM_TOL * scale:
        raise InputError(f"{name} is not symmetric")
    return A


def as_density(A, name="A"):
    """Validate a unit-trace PSD matrix (trace and smallest eigenvalue within 1e-10)."""
    A = as_symmetric(A, name)
    tr = np.trace(A)
    if abs(tr - 1.0) > DENSITY_TOL:
        raise InputError(f"{name} must have unit trace, got {tr!r}")
    lam_min = np.linalg.eigvalsh(A)[0]
    if lam_min < -DENSITY_TOL:
        raise NotPSDError(f"{name} has eigenvalue {lam_min:.3e} < 0")
    return A


def eig_sym(A):
    """Eigendecomposition of a real symmetric matrix.

    Parameters
    ----------
    A : (n, n) array_like
        Symmetric matrix with finite entries.

    Returns
    -------
    EigenSystem
        Eigenvalues in non-increasing order and orthonormal eigenvectors as
        columns.  Within an eigenspace of repeated eigenvalues the basis is
        whatever LAPACK returns; it is reproducible for a given input.
    """
    A = as_symmetric(A)
    lam, U = np.linalg.eigh(A)
    return EigenSystem(lam[::-1].copy(), U[:, ::-1].copy())


def noise_floor(lam):
    """Eigenvalues at or below ``n * eps * lam_max`` are numerically indistinguishable from 0."""
    lam = np.asarray(lam, dtype=float)
    return lam.size * np.finfo(float).eps * max(float(np.max(np.abs(lam))), 0.0)


def clamp_threshold(eigenvalues, tol=CLAMP_TOL):
    return tol * max(1.0, float(np.max(eigenvalues)))


def clamped_eigenvalues(lam, tol=CLAMP_TOL, name="A"):
    """Zero out roundoff eigenvalues; raise :class:`NotPSDError` on genuinely negative ones.

    Negatives above ``-tol * max(1, lam_max)`` and anything at or below the
    :func:`noise_floor` become exactly 0, so ``0 ** r = 0`` applies to them.
    """
    thr = clamp_threshold(lam, tol)
    if lam.min() < -thr:
        raise NotPSDError(f"{name} has eigenvalue {lam.min():.3e} below -{thr:.1e}")
    return np.where(lam > noise_floor(lam), lam, 0.0)


def spectral_apply(A, func):
    """Primary matrix function ``U diag(func(lam)) U^T`` of symmetric ``A``."""
    lam, U = eig_sym(A)
    return (U * func(lam)) @ U.T


def matrix_power(A, r):
    """Fractional power of a PSD matrix.

    Negative eigenvalues within the clamp tolerance are set to zero before
    powering and ``0**r`` is taken as 0.
    """
    if not r > 0:
        raise InputError(f"power must be positive, got {r!r}")
    lam, U = eig_sym(A)
    lam = clamped_eigenvalues(lam)
    return (U * lam**r) @ U.T


def hadamard(A, B):
    A = as_symmetric(A, "A")
    B = as_symmetric(B, "B")
    if A.shape != B.shape:
        raise InputError(f"shape mismatch: {A.shape} vs {B.shape}")
    return A * B


def hadamard_power(A, r):
    """Elementwise power ``A_ij ** r`` of a matrix with strictly positive entries."""
    A = as_symmetric(A)
    if r < 0:
        raise InputError(f"Hadamard power must be nonnegative, got {r!r}")
    if np.any(A <= 0):
        raise DomainError("Hadamard power requires strictly positive entries")
    return np.exp(r * np.log(A))


def kron(A, B):
    return np.kron(as_symmetric(A, "A"), as_symmetric(B, "B"))


def majorizes(q, p, tol=1e-10):
    """True if ``q`` majorizes ``p``.

    Both vectors are sorted in decreasing order and every partial sum of
    ``q`` must dominate the corresponding partial sum of ``p`` (up to
    ``tol``).  The totals must agree to within 1e-8.
    """
    q = np.asarray(q, dtype=float).ravel()
    p = np.asarray(p, dtype=float).ravel()
    if q.shape != p.shape:
        raise InputError("majorization needs vectors of equal length")
    if abs(q.sum() - p.sum()) > 1e-8:
        raise InputError(f"sums differ: {q.sum()!r} vs {p.sum()!r}")
    cq = np.cumsum(np.sort(q)[::-1])
    cp = np.cumsum(np.sort(p)[::-1])
    return bool(np.all(cp <= cq + tol))


def psd_check(A, tol=1e-10):
    """True iff the smallest eigenvalue is at least ``-tol * max(1, lam_max)``."""
    lam = np.linalg.eigvalsh(as_symmetric(A))
    return bool(lam[0] >= -tol * max(1.0, lam[-1]))


def centering_matrix(n):
    return np.eye(n) - np.full((n, n), 1.0 / n)


def centered_negdef_check(B, tol=1e-10):
    """Conditional negative definiteness of ``B``.

    Checks ``sum_ij c_i c_j B_ij <= 0`` for all ``c`` with ``sum(c) = 0``
    by requiring the largest eigenvalue of ``J B J`` to be at most
    ``tol * max(1, |lam|_max)``, where ``J`` is the centering matrix.
    """
    lam = centered_spectrum(B)
    return bool(lam[-1] <= tol * max(1.0, float(np.max(np.abs(lam)))))


def centered_spectrum(B):
    """Ascending eigenvalues of ``J B J``.

    The largest is nonpositive iff ``B`` is conditionally negative definite.
    """
    B = as_symmetric(B, "B")
    J = centering_matrix(B.shape[0])
    C = J @ B @ J
    return np.linalg.eigvalsh((C + C.T) / 2)
