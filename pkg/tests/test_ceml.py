import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gramentropy import ceml
from gramentropy.ceml import (
    Dataset,
    MetricModel,
    TrainConfig,
    ceml_gradient,
    ceml_objective,
    initial_projection,
    label_gram,
    load_model,
    project_trace,
    save_model,
    train,
    transform,
)
from gramentropy.entropy import renyi_entropy
from gramentropy.errors import DivergenceError, InputError
from gramentropy.evaluation import STUDY_SIGMA, STUDY_STEP, STUDY_TOL, SyntheticSpec, synth_bimodal
from gramentropy.gradcheck import ceml_case, random_ceml_problem
from gramentropy.idkernels import gaussian_gram, sq_distances


def blobs(rng, n=20, d=3, gap=10.0):
    X = np.vstack([rng.standard_normal((n, d)), rng.standard_normal((n, d)) + gap])
    return Dataset(X, np.repeat([0, 1], n))


def test_label_gram_examples():
    np.testing.assert_allclose(label_gram([0, 0, 1]), np.array([[1, 1, 0], [1, 1, 0], [0, 0, 1]]) / 3)
    L = label_gram([2, 2, 2, 2])
    np.testing.assert_allclose(L, np.ones((4, 4)) / 4)
    assert renyi_entropy(L, 2) == pytest.approx(0.0, abs=1e-12)
    L = label_gram(np.arange(5))
    np.testing.assert_allclose(L, np.eye(5) / 5)
    assert renyi_entropy(L, 2) == pytest.approx(math.log2(5), abs=1e-12)


def test_dataset_validation():
    with pytest.raises(InputError):
        Dataset(np.zeros((3, 2)), [0, 1])
    with pytest.raises(InputError):
        Dataset(np.zeros((1, 2)), [0])
    with pytest.raises(InputError):
        Dataset(np.zeros((2, 2)), [0.5, 1])
    with pytest.raises(InputError):
        Dataset(np.array([[np.inf, 0], [0, 0]]), [0, 1])
    d = Dataset(np.zeros((3, 2)), [0, 1, 1])
    assert (d.n, d.d) == (3, 2)
    with pytest.raises(ValueError):
        d.features[0, 0] = 1.0


def test_objective_all_same_label(rng):
    data = Dataset(rng.standard_normal((15, 3)), np.zeros(15, dtype=int))
    A = project_trace(rng.standard_normal((3, 2)))
    assert ceml_objective(A, data, 1.01, 1.0) == 0.0
    np.testing.assert_array_equal(ceml_gradient(A, data, 1.01, 1.0), 0.0)


def test_objective_all_distinct_labels(rng):
    n = 12
    X = rng.standard_normal((n, 3))
    data = Dataset(X, np.arange(n))
    A = project_trace(rng.standard_normal((3, 2)))
    for alpha in (1.01, 2.0):
        f = ceml_objective(A, data, alpha, 1.0)
        expected = math.log2(n) - renyi_entropy(gaussian_gram(X @ A, 1.0), alpha)
        assert f == pytest.approx(expected, abs=1e-10)
        assert f >= 0


def test_objective_separated_clusters(rng):
    data = blobs(rng)
    A = project_trace(np.ones((3, 1)))
    assert ceml_objective(A, data, 1.01, 0.5) == pytest.approx(0.0, abs=1e-6)


def test_objective_nonnegative(rng):
    for _ in range(30):
        data, A, sigma = random_ceml_problem(rng)
        for alpha in (1.01, 2.0, 5.0):
            assert ceml_objective(A, data, alpha, sigma) >= -1e-8


def test_objective_can_exceed_label_entropy():
    # S(L|Y) <= S(L) is not guaranteed; at high orders it fails on some draws.
    r = np.random.default_rng(0)
    excess = []
    for _ in range(40):
        data, A, sigma = random_ceml_problem(r)
        excess.append(ceml_objective(A, data, 5.0, sigma) - renyi_entropy(label_gram(data.labels), 5.0))
    assert max(excess) > 0.01


def test_objective_scale_invariance(rng):
    data, A, sigma = random_ceml_problem(rng)
    f = ceml_objective(A, data, 2.0, sigma)
    for c in (0.5, 2.0):
        assert ceml_objective(c * A, data, 2.0, c * sigma) == pytest.approx(f, abs=1e-10)


@pytest.mark.parametrize("alpha", [1.01, 2.0])
def test_gradient_matches_finite_difference(rng, alpha):
    for _ in range(5):
        data, A, sigma = random_ceml_problem(rng)
        assert ceml_case(A, data, alpha, sigma) >= 0.999


def test_gradient_scale_matches_finite_difference(rng):
    # Cosine similarity alone would not catch a wrong overall constant.
    data, A, sigma = random_ceml_problem(rng)
    g = ceml_gradient(A, data, 1.01, sigma)
    E = rng.standard_normal(A.shape)
    h = 1e-6
    fd = (ceml_objective(A + h * E, data, 1.01, sigma) - ceml_objective(A - h * E, data, 1.01, sigma)) / (2 * h)
    assert np.sum(g * E) == pytest.approx(fd, rel=1e-5)


def test_truncated_gradient_full_rank_is_exact(rng):
    data, A, sigma = random_ceml_problem(rng)
    np.testing.assert_allclose(
        ceml_gradient(A, data, 2.0, sigma, truncate_m=data.n), ceml_gradient(A, data, 2.0, sigma), atol=1e-12
    )


def test_project_trace_examples(rng):
    A = project_trace(rng.standard_normal((4, 2)))
    np.testing.assert_array_equal(project_trace(A), A)
    np.testing.assert_allclose(project_trace(2 * A), A, rtol=1e-15)
    for _ in range(50):
        p = int(rng.integers(1, 5))
        B = project_trace(rng.standard_normal((6, p)) * rng.uniform(0.01, 100), p)
        assert abs(np.trace(B.T @ B) - p) <= 1e-12


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_initial_projection_feasible(d, p, seed):
    A = initial_projection(d, p, seed)
    assert A.shape == (d, p)
    assert abs(np.sum(A * A) - p) <= 1e-12
    np.testing.assert_array_equal(A, initial_projection(d, p, seed))


def test_train_all_same_label(rng):
    data = Dataset(rng.standard_normal((10, 3)), np.ones(10, dtype=int))
    _, report = train(data, TrainConfig(p=2))
    assert report.iterations_run == 1
    assert report.final_objective == 0.0
    assert report.converged


def test_train_descends_and_stays_feasible(rng):
    data, _, sigma = random_ceml_problem(rng, n=40)
    model, report = train(data, TrainConfig(alpha=2.0, sigma=sigma, p=2, max_iters=50))
    tr = np.array(report.objective_trace)
    assert np.all(np.diff(tr) <= 1e-10)
    assert abs(np.sum(model.projection**2) - 2) <= 1e-8
    assert report.final_objective == pytest.approx(tr[-1])


def test_train_reaches_stationary_point():
    data = synth_bimodal(SyntheticSpec(seed=2))
    cfg = TrainConfig(alpha=1.01, sigma=STUDY_SIGMA, p=1, step_size=STUDY_STEP, tol=STUDY_TOL)

    def tangential(A):
        g = ceml_gradient(A, data, cfg.alpha, cfg.sigma)
        return np.linalg.norm(g - np.sum(g * A) / np.sum(A * A) * A)

    for seed in range(3):
        model, _ = train(data, cfg.replace(seed=seed))
        assert tangential(model.projection) <= 1e-3 * tangential(initial_projection(2, 1, seed))


def test_truncated_training_close_to_full():
    data = synth_bimodal(SyntheticSpec(seed=2))
    cfg = TrainConfig(alpha=1.01, sigma=STUDY_SIGMA, p=1, step_size=STUDY_STEP, tol=STUDY_TOL)
    _, full = train(data, cfg)
    for m in (2, 5, 20):
        _, trunc = train(data, cfg.replace(truncate_m=m))
        assert abs(trunc.final_objective - full.final_objective) <= 0.05 * abs(full.final_objective)


def test_train_is_deterministic(rng):
    data, _, sigma = random_ceml_problem(rng)
    cfg = TrainConfig(sigma=sigma, p=2, max_iters=20, seed=7)
    m1, r1 = train(data, cfg)
    m2, r2 = train(data, cfg)
    np.testing.assert_array_equal(m1.projection, m2.projection)
    assert r1.to_dict() == r2.to_dict()


def test_train_divergence(monkeypatch, rng):
    data, _, sigma = random_ceml_problem(rng)
    monkeypatch.setattr(ceml._Problem, "objective", lambda self, A: float("nan"))
    with pytest.raises(DivergenceError) as info:
        train(data, TrainConfig(sigma=sigma, p=2))
    assert info.value.report is not None
    assert info.value.report.iterations_run == 1


def test_train_config_validation():
    for bad in ({"alpha": 1.0}, {"sigma": 0}, {"p": 0}, {"step_size": 0}, {"max_iters": 0}, {"tol": 0},
                {"truncate_m": 0}, {"p": 1.5}):
        with pytest.raises(InputError):
            TrainConfig(**bad)
    with pytest.raises(InputError):
        train(Dataset(np.zeros((4, 2)), [0, 0, 1, 1]), TrainConfig(p=3))


def test_transform_examples(rng):
    A = np.eye(4)[:, :2] * 1.0
    model = MetricModel(A, 1.01, 1.0)
    X = rng.standard_normal((5, 4))
    np.testing.assert_array_equal(transform(model, X), X[:, :2])
    B = project_trace(rng.standard_normal((4, 2)))
    m = MetricModel(B, 2.0, 1.0)
    Y = transform(m, X)
    M = B @ B.T
    for i in range(5):
        for j in range(5):
            dx = X[i] - X[j]
            assert np.sum((Y[i] - Y[j]) ** 2) == pytest.approx(dx @ M @ dx, abs=1e-10)
    assert transform(m, np.empty((0, 4))).shape == (0, 2)
    with pytest.raises(InputError):
        transform(m, np.zeros((3, 5)))


def test_model_validation():
    with pytest.raises(InputError):
        MetricModel(np.zeros((3, 1)), 1.01, 1.0)
    with pytest.raises(InputError):
        MetricModel(np.ones((3, 1)), 1.01, 1.0)


def test_model_round_trip(tmp_path, rng):
    model = MetricModel(project_trace(rng.standard_normal((4, 3))), 1.01, math.sqrt(3))
    path = tmp_path / "m.txt"
    save_model(model, path)
    back = load_model(path)
    np.testing.assert_array_equal(back.projection, model.projection)
    assert (back.alpha, back.sigma) == (model.alpha, model.sigma)


def test_model_file_malformed(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("d 2\np 1\nalpha 2\nsigma 1\n1.0\n")
    with pytest.raises(InputError):
        load_model(path)
