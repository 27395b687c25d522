"""Finite-difference checks of the entropy and CEML gradients.

The oracles only ever call the objective functions; they never touch the
eigenvector formulas they are checking.
"""

from dataclasses import dataclass, field

import numpy as np

from .ceml import Dataset, ceml_gradient, ceml_objective
from .entropy import entropy_gradient, renyi_entropy

ENTROPY_REL_TOL = 1e-5
CEML_COS_TOL = 0.999


def random_density(rng, n, floor=0.05):
    """Random unit-trace PSD matrix whose eigenvalues are at least ``floor / n`` (relative)."""
    G = rng.standard_normal((n, n))
    W = G @ G.T / n + floor * np.eye(n)
    return W / np.trace(W)


def rank_deficient_density(rng, n, rank):
    G = rng.standard_normal((n, rank))
    W = G @ G.T
    return W / np.trace(W)


def random_traceless(rng, n):
    E = rng.standard_normal((n, n))
    E = (E + E.T) / 2
    E -= np.trace(E) / n * np.eye(n)
    return E / np.linalg.norm(E, 2)


def directional_fd(f, h):
    """Richardson-extrapolated central difference of a scalar function of ``t`` at 0."""
    d1 = (f(h) - f(-h)) / (2 * h)
    d2 = (f(h / 2) - f(-h / 2)) / h
    return (4 * d2 - d1) / 3


def entropy_case(A, E, alpha, h):
    """Relative disagreement between ``<grad S(A), E>`` and a finite difference along ``E``."""
    analytic = float(np.sum(entropy_gradient(A, alpha) * E))
    numeric = directional_fd(lambda t: renyi_entropy(A + t * E, alpha), h)
    return abs(analytic - numeric) / max(abs(numeric), abs(analytic), 1e-12)


def ceml_case(A, data, alpha, sigma, h=1e-6):
    """Cosine similarity between the analytic CEML gradient and an entrywise finite difference."""
    g = ceml_gradient(A, data, alpha, sigma)
    fd = np.zeros_like(A)
    for idx in np.ndindex(A.shape):
        E = np.zeros_like(A)
        E[idx] = h
        fd[idx] = (ceml_objective(A + E, data, alpha, sigma) - ceml_objective(A - E, data, alpha, sigma)) / (2 * h)
    denom = np.linalg.norm(g) * np.linalg.norm(fd)
    if denom == 0:
        return 1.0 if not np.any(g) and not np.any(fd) else 0.0
    return float(np.sum(g * fd) / denom)


@dataclass
class GradcheckReport:
    entropy_max_rel_error: float = 0.0
    entropy_cases: int = 0
    ceml_min_cosine: float = 1.0
    ceml_cases: int = 0
    worst: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.entropy_max_rel_error <= ENTROPY_REL_TOL and self.ceml_min_cosine >= CEML_COS_TOL

    def to_dict(self):
        return {
            "entropy_max_rel_error": self.entropy_max_rel_error,
            "entropy_cases": self.entropy_cases,
            "entropy_tolerance": ENTROPY_REL_TOL,
            "ceml_min_cosine": self.ceml_min_cosine,
            "ceml_cases": self.ceml_cases,
            "ceml_tolerance": CEML_COS_TOL,
            "passed": self.passed,
            "worst": self.worst,
        }


def entropy_suite(seed=0, sizes=(2, 5, 16, 40), alphas=(0.5, 1.01, 2.0, 5.0), cases=100,
                  adversarial=True):
    """Check the entropy gradient on ``cases`` random (matrix, order) pairs.

    With ``adversarial`` an extra rank-deficient case per order probes the
    clamping of zero eigenvalues (orders above 1 only), perturbing within
    the range of the matrix so the entropy stays differentiable.

    Returns ``(max relative error, worst case description)``.
    """
    rng = np.random.default_rng(seed)
    worst, worst_case = 0.0, {}
    for i in range(cases):
        n = int(sizes[i % len(sizes)])
        alpha = float(alphas[(i // len(sizes)) % len(alphas)])
        A = random_density(rng, n)
        E = random_traceless(rng, n)
        h = 1e-2 * np.linalg.eigvalsh(A)[0]
        err = entropy_case(A, E, alpha, h)
        if err > worst:
            worst, worst_case = err, {"kind": "entropy", "n": n, "alpha": alpha, "case": i}
    if adversarial:
        for alpha in alphas:
            if alpha <= 1:
                continue
            n = int(max(sizes))
            rank = max(1, n // 3)
            A = rank_deficient_density(rng, n, rank)
            lam, U = np.linalg.eigh(A)
            R = U[:, -rank:]
            E = random_traceless(rng, rank)
            E = R @ E @ R.T
            h = 1e-2 * lam[-rank]
            err = entropy_case(A, E, alpha, h)
            if err > worst:
                worst, worst_case = err, {"kind": "entropy-rank-deficient", "n": n, "alpha": alpha}
    return worst, worst_case


def random_ceml_problem(rng, n=30, d=4, p=2, classes=3):
    X = rng.standard_normal((n, d))
    y = rng.integers(0, classes, n)
    A = rng.standard_normal((d, p))
    A *= np.sqrt(p / np.sum(A * A))
    sigma = float(rng.uniform(0.7, 2.0))
    return Dataset(X, y), A, sigma


def ceml_suite(seed=0, alphas=(1.01, 2.0), cases=20):
    """Minimum cosine similarity of analytic vs finite-difference CEML gradients."""
    rng = np.random.default_rng(seed + 1)
    worst, worst_case = 1.0, {}
    for i in range(cases):
        alpha = float(alphas[i % len(alphas)])
        data, A, sigma = random_ceml_problem(rng)
        cos = ceml_case(A, data, alpha, sigma)
        if cos < worst:
            worst, worst_case = cos, {"kind": "ceml", "alpha": alpha, "sigma": sigma, "case": i}
    return worst, worst_case


def run_gradcheck(seed=0, sizes=(2, 5, 16, 40), alphas=(0.5, 1.01, 2.0, 5.0), entropy_cases=100,
                  ceml_cases=20):
    report = GradcheckReport(entropy_cases=entropy_cases, ceml_cases=ceml_cases)
    report.entropy_max_rel_error, w1 = entropy_suite(seed, sizes, alphas, entropy_cases)
    ceml_alphas = tuple(a for a in alphas if a > 1) or (1.01,)
    report.ceml_min_cosine, w2 = ceml_suite(seed, ceml_alphas, ceml_cases)
    report.worst = {"entropy": w1, "ceml": w2}
    return report
