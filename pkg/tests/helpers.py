"""Random generators shared by the test modules."""

import numpy as np

from gramentropy.idkernels import divisibility_report, gaussian_gram


def random_psd(rng, n, rank=None):
    rank = n if rank is None else rank
    V = rng.standard_normal((n, rank))
    return V @ V.T


def random_density(rng, n, rank=None):
    A = random_psd(rng, n, rank)
    return A / np.trace(A)


def random_orthogonal(rng, n):
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    return Q * np.sign(np.diag(R))


def random_unit_diag_nonneg(rng, n):
    """Unit-trace PSD matrix with nonnegative entries and diagonal ``1/n``."""
    if rng.random() < 0.5:
        X = rng.standard_normal((n, int(rng.integers(1, 4))))
        return gaussian_gram(X, float(rng.uniform(0.3, 3.0)))
    V = rng.uniform(0, 1, (n, int(rng.integers(1, n + 1))))
    G = V @ V.T
    s = np.sqrt(np.diag(G))
    return G / np.outer(s, s) / n


def random_nonneg_density(rng, n):
    """Unit-trace PSD matrix with nonnegative entries (diagonal unconstrained)."""
    kind = rng.integers(3)
    if kind == 0:
        V = rng.uniform(0, 1, (n, int(rng.integers(1, n + 1))))
        G = V @ V.T
    elif kind == 1:
        G = gaussian_gram(rng.standard_normal((n, 2)), float(rng.uniform(0.3, 3.0)))
        w = rng.uniform(0.2, 1.0, n)
        G = G * np.outer(w, w)
    else:
        y = rng.integers(0, max(1, n // 2), n)
        G = (y[:, None] == y[None, :]).astype(float)
    return G / np.trace(G)


def non_id_witness(seed=0, n=3):
    """PSD matrix with positive entries that fails both divisibility routes.

    Found by seeded random search over normalized rank-2 products of
    positive vectors.
    """
    rng = np.random.default_rng(seed)
    while True:
        V = rng.uniform(0, 1, (n, 2))
        A = V @ V.T
        if np.any(A <= 1e-3):
            continue
        s = np.sqrt(np.diag(A))
        A = A / np.outer(s, s)
        rep = divisibility_report(A)
        if not rep.infinitely_divisible and not all(rep.power_flags.values()):
            return A
