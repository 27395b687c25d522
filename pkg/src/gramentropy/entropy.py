"""Matrix-based Renyi entropy on unit-trace PSD matrices.

The entropy of order ``alpha`` of a unit-trace PSD matrix ``A`` with
eigenvalues ``lam`` is::

    S_alpha(A) = log2(sum(lam ** alpha)) / (1 - alpha)

measured in bits.  Joint entropy uses the trace-normalized Hadamard product,
conditional entropy is the difference between joint and marginal entropy.
"""

import math

import numpy as np
import scipy.linalg

from .errors import DegenerateError, DomainError, InputError, PreconditionError
from .spectra import (
    as_density,
    as_symmetric,
    clamped_eigenvalues,
    eig_sym,
    hadamard_power,
    noise_floor,
)

#: Smallest eigenvalue allowed in the gradient when alpha < 1.
GRAD_FLOOR = 1e-12
#: Below this ``tr(A^alpha)`` or ``tr(A o B)`` is treated as zero.
DEGENERATE_TOL = 1e-14
LN2 = math.log(2.0)


def check_order(alpha):
    """Validate an entropy order: positive and at least 1e-6 away from 1."""
    alpha = float(alpha)
    if not (alpha > 0 and abs(alpha - 1.0) >= 1e-6) or not math.isfinite(alpha):
        raise InputError(f"entropy order must be > 0 and != 1, got {alpha!r}")
    return alpha


def entropy_from_eigenvalues(lam, alpha):
    """Renyi entropy in bits of a nonnegative spectrum (no normalization applied)."""
    lam = np.asarray(lam, dtype=float)
    power_sum = np.sum(lam[lam > 0] ** alpha)
    return math.log2(power_sum) / (1.0 - alpha)


def renyi_entropy(A, alpha, allow_subunit_trace=False):
    """Matrix-based Renyi entropy of order ``alpha``, in bits.

    Parameters
    ----------
    A : (n, n) array_like
        Unit-trace PSD matrix.  Tiny negative eigenvalues are clamped to 0.
    alpha : float
        Entropy order, ``alpha > 0`` and ``alpha != 1``.
    allow_subunit_trace : bool
        Accept PSD matrices with ``0 < tr(A) <= 1``; used to probe the
        continuity of ``p -> S_alpha(pA)``.

    Returns
    -------
    float
        Entropy in ``[0, log2(n)]`` for unit-trace inputs.
    """
    alpha = check_order(alpha)
    if allow_subunit_trace:
        A = as_symmetric(A)
        tr = np.trace(A)
        if not 0 < tr <= 1 + 1e-10:
            raise InputError(f"trace must lie in (0, 1], got {tr!r}")
    else:
        A = as_density(A)
    lam = clamped_eigenvalues(np.linalg.eigvalsh(A))
    return entropy_from_eigenvalues(lam, alpha)


def joint_entropy(A, B, alpha):
    """Entropy of the trace-normalized Hadamard product ``A o B``."""
    A = as_density(A, "A")
    B = as_density(B, "B")
    if A.shape != B.shape:
        raise InputError(f"shape mismatch: {A.shape} vs {B.shape}")
    C = A * B
    tr = np.trace(C)
    if tr <= DEGENERATE_TOL:
        raise DegenerateError(f"tr(A o B) = {tr!r} is too small to normalize")
    return renyi_entropy(C / tr, alpha)


def conditional_entropy(A, B, alpha):
    """Conditional entropy ``S(A|B) = S(A o B / tr(A o B)) - S(B)``.

    Requires ``A_ii = 1/n`` and nonnegative entries in both matrices, the
    conditions under which the result lies in ``[0, S_alpha(A)]``.
    """
    A = as_density(A, "A")
    B = as_density(B, "B")
    n = A.shape[0]
    if np.max(np.abs(np.diag(A) - 1.0 / n)) > 1e-8:
        raise PreconditionError("conditional entropy requires A_ii = 1/n")
    if np.any(A < 0) or np.any(B < 0):
        raise PreconditionError("conditional entropy requires nonnegative entries")
    return joint_entropy(A, B, alpha) - renyi_entropy(B, alpha)


def hadamard_geometric_average(A, B, r):
    """Weighted elementwise geometric mean ``A^(o r) o B^(o (1-r))``.

    Both matrices need strictly positive entries and identical diagonals,
    so the result keeps their trace.  The result is PSD whenever both
    inputs are infinitely divisible; otherwise it may not be.
    """
    if not 0.0 <= r <= 1.0:
        raise InputError(f"weight must lie in [0, 1], got {r!r}")
    A = as_symmetric(A, "A")
    B = as_symmetric(B, "B")
    if A.shape != B.shape:
        raise InputError(f"shape mismatch: {A.shape} vs {B.shape}")
    if np.any(A <= 0) or np.any(B <= 0):
        raise DomainError("geometric average requires strictly positive entries")
    dA, dB = np.diag(A), np.diag(B)
    if np.max(np.abs(dA - dB)) > 1e-10 * max(1.0, np.max(np.abs(dA))):
        raise PreconditionError("geometric average requires matching diagonals")
    if r == 1.0:
        return A.copy()
    if r == 0.0:
        return B.copy()
    return hadamard_power(A, r) * hadamard_power(B, 1.0 - r)


def _gradient_scale(lam, alpha, units):
    power_sum = np.sum(lam[lam > 0] ** alpha)
    if power_sum <= DEGENERATE_TOL:
        raise DegenerateError(f"tr(A^alpha) = {power_sum!r} is too small")
    scale = alpha / ((1.0 - alpha) * power_sum)
    if units == "bits":
        return scale / LN2
    if units == "nats":
        return scale
    raise InputError(f"units must be 'bits' or 'nats', got {units!r}")


def _powered(lam, alpha, floor=None):
    """``lam ** (alpha - 1)`` with the convention that zero eigenvalues map to 0.

    Eigenvalues within roundoff of zero count as zero.
    """
    if alpha < 1 and lam.min() < GRAD_FLOOR:
        raise PreconditionError(
            f"eigenvalue {lam.min():.3e} below {GRAD_FLOOR:g}; gradient diverges for alpha < 1"
        )
    out = np.zeros_like(lam)
    pos = lam > (noise_floor(lam) if floor is None else floor)
    out[pos] = lam[pos] ** (alpha - 1.0)
    return out


def entropy_gradient(A, alpha, units="bits"):
    """Gradient of ``S_alpha`` at a PSD matrix ``A``.

    Returns ``c * U diag(lam ** (alpha - 1)) U^T`` with
    ``c = alpha / ((1 - alpha) tr(A^alpha))``, divided by ``ln 2`` when
    ``units="bits"`` so that it is the derivative of :func:`renyi_entropy`.
    """
    alpha = check_order(alpha)
    lam, U = eig_sym(A)
    lam = clamped_eigenvalues(lam)
    scale = _gradient_scale(lam, alpha, units)
    G = (U * (scale * _powered(lam, alpha))) @ U.T
    return (G + G.T) / 2


def entropy_gradient_truncated(A, alpha, m, units="bits"):
    """Gradient of ``S_alpha`` built from the ``m`` leading eigenpairs only.

    The scalar prefactor still uses the full spectrum; only the
    ``U diag(lam ** (alpha - 1)) U^T`` factor is truncated, which for
    ``alpha > 1`` is its best rank-``m`` Frobenius approximation.
    """
    alpha = check_order(alpha)
    A = as_symmetric(A)
    n = A.shape[0]
    m = int(m)
    if not 1 <= m <= n:
        raise InputError(f"truncation rank must lie in [1, {n}], got {m}")
    lam_all = clamped_eigenvalues(np.linalg.eigvalsh(A)[::-1])
    scale = _gradient_scale(lam_all, alpha, units)
    if m == n:
        lam, U = eig_sym(A)
        lam = np.clip(lam, 0.0, None)
    else:
        lam, U = scipy.linalg.eigh(A, subset_by_index=[n - m, n - 1])
        lam, U = np.clip(lam[::-1], 0.0, None), U[:, ::-1]
    G = (U * (scale * _powered(lam, alpha, noise_floor(lam_all)))) @ U.T
    return (G + G.T) / 2


def second_order_entropy_trace(K):
    """Second-order entropy from the trace form ``-log2(tr(K K))``.

    For a unit-trace PSD ``K`` this equals ``renyi_entropy(K, 2)`` without
    an eigendecomposition.
    """
    K = as_density(K, "K")
    return -math.log2(float(np.sum(K * K)))
