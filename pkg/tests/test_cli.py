import json

import numpy as np
import pytest

from gramentropy import __version__
from gramentropy.ceml import load_model
from gramentropy.cli import main
from gramentropy.entropy import renyi_entropy
from gramentropy.idkernels import gaussian_gram, log_gaussian_gram
from gramentropy.io import read_dataset_csv, write_matrix_csv

from helpers import non_id_witness


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    doc = json.loads(out.out) if out.out.strip() else None
    return code, doc, out.err


def strip_duration(doc):
    doc = json.loads(json.dumps(doc))
    doc["manifest"].pop("duration_s")
    return doc


def test_entropy_uniform(tmp_path, capsys):
    write_matrix_csv(tmp_path / "g.csv", np.eye(4) / 4)
    code, doc, _ = run(capsys, "entropy", "--gram", tmp_path / "g.csv", "--alpha", 2)
    assert code == 0
    assert doc["entropy_bits"] == pytest.approx(2.0, abs=1e-12)
    assert doc["n"] == 4 and doc["alpha"] == 2.0
    m = doc["manifest"]
    assert m["command"] == "entropy" and m["version"] == __version__
    assert str(tmp_path / "g.csv") in m["inputs"]


def test_entropy_rank_one(tmp_path, capsys):
    write_matrix_csv(tmp_path / "g.csv", np.ones((5, 5)) / 5)
    code, doc, _ = run(capsys, "entropy", "--gram", tmp_path / "g.csv", "--alpha", 2)
    assert code == 0 and doc["entropy_bits"] == pytest.approx(0.0, abs=1e-12)


def test_entropy_from_features(tmp_path, capsys, rng):
    X = rng.standard_normal((10, 3))
    write_matrix_csv(tmp_path / "x.csv", X)
    code, doc, _ = run(capsys, "entropy", "--features", tmp_path / "x.csv", "--sigma", np.sqrt(3), "--alpha", 1.01)
    assert code == 0
    assert doc["entropy_bits"] == renyi_entropy(gaussian_gram(X, np.sqrt(3)), 1.01)


def test_entropy_errors(tmp_path, capsys):
    (tmp_path / "bad.csv").write_text("1,a\n")
    assert run(capsys, "entropy", "--gram", tmp_path / "bad.csv", "--alpha", 2)[0] == 2
    write_matrix_csv(tmp_path / "neg.csv", np.diag([1.2, -0.2]))
    assert run(capsys, "entropy", "--gram", tmp_path / "neg.csv", "--alpha", 2)[0] == 3
    assert run(capsys, "entropy", "--alpha", 2)[0] == 2


def test_check_id(tmp_path, capsys, rng):
    write_matrix_csv(tmp_path / "ones.csv", np.ones((3, 3)))
    code, doc, _ = run(capsys, "check-id", tmp_path / "ones.csv")
    assert code == 0 and doc["infinitely_divisible"] and doc["route"] == "log-negdef"
    X = rng.standard_normal((8, 2))
    write_matrix_csv(tmp_path / "k.csv", gaussian_gram(X, 1.0))
    assert run(capsys, "check-id", tmp_path / "k.csv")[0] == 0
    write_matrix_csv(tmp_path / "w.csv", non_id_witness())
    code, doc, _ = run(capsys, "check-id", tmp_path / "w.csv")
    assert code == 1 and not doc["infinitely_divisible"]
    write_matrix_csv(tmp_path / "z.csv", np.eye(3))
    assert run(capsys, "check-id", tmp_path / "z.csv")[0] == 2
    write_matrix_csv(tmp_path / "l.csv", log_gaussian_gram(X * 50, 0.1))
    assert run(capsys, "check-id", tmp_path / "l.csv", "--log-domain")[0] == 0


def test_gradcheck(capsys):
    code, doc, _ = run(capsys, "gradcheck")
    assert code == 0 and doc["passed"]
    code, doc, _ = run(capsys, "gradcheck", "--alphas", "2")
    assert code == 0 and doc["passed"]


def test_synth_and_train(tmp_path, capsys):
    out = tmp_path / "s.csv"
    code, doc, _ = run(capsys, "synth", "--out", out)
    assert code == 0 and doc["rows"] == 200
    data = read_dataset_csv(out)
    assert data.n == 200
    code2, doc2, _ = run(capsys, "synth", "--out", tmp_path / "t.csv")
    assert doc2["sha256"] == doc["sha256"]
    code, doc, _ = run(capsys, "train", out, "--p", 1, "--sigma", 4.8, "--step", 5, "--tol", 1e-10,
                       "--out", tmp_path / "m.txt")
    assert code == 0
    assert 0 <= doc["direction_angle"] <= 90
    assert doc["direction"] in ("horizontal", "vertical")
    assert load_model(tmp_path / "m.txt").p == 1


def test_train_single_label(tmp_path, capsys):
    (tmp_path / "d.csv").write_text("0,1,7\n1,0,7\n2,2,7\n")
    code, doc, _ = run(capsys, "train", tmp_path / "d.csv", "--p", 1, "--raw")
    assert code == 0
    assert doc["report"]["final_objective"] == 0.0 and doc["report"]["iterations_run"] == 1


def test_train_iris_round_trip(tmp_path, capsys):
    code, doc, _ = run(capsys, "train", "iris", "--out", tmp_path / "iris.txt", "--max-iters", 20)
    assert code == 0
    model = load_model(tmp_path / "iris.txt")
    np.testing.assert_array_equal(model.projection, np.array(doc["projection"]))


def test_train_divergence_exit_code(tmp_path, capsys, monkeypatch):
    from gramentropy import ceml

    monkeypatch.setattr(ceml._Problem, "objective", lambda self, A: float("nan"))
    code, doc, err = run(capsys, "train", "iris", "--max-iters", 5)
    assert code == 4 and "error" in doc and "iteration" in err


def test_eval_compare_and_determinism(tmp_path, capsys):
    argv = ["eval", "iris", "--runs", 2, "--max-iters", 20, "--compare"]
    code, doc, _ = run(capsys, *argv)
    assert code == 0
    assert [r["method"] for r in doc["results"]] == ["ceml", "euclidean", "inverse_covariance"]
    _, again, _ = run(capsys, *argv)
    assert strip_duration(doc) == strip_duration(again)


def test_eval_baseline_on_blobs(tmp_path, capsys, rng):
    X = np.vstack([rng.standard_normal((20, 2)), rng.standard_normal((20, 2)) + 10])
    rows = np.column_stack([X, np.repeat([0, 1], 20)])
    np.savetxt(tmp_path / "b.csv", rows, delimiter=",", fmt="%.17g")
    code, doc, _ = run(capsys, "eval", tmp_path / "b.csv", "--method", "euclidean")
    assert code == 0 and doc["results"][0]["mean_error"] == pytest.approx(0.0, abs=0.02)


def test_eval_model_mismatch(tmp_path, capsys):
    run(capsys, "synth", "--out", tmp_path / "s.csv")
    run(capsys, "train", tmp_path / "s.csv", "--p", 1, "--out", tmp_path / "m.txt", "--max-iters", 5)
    assert run(capsys, "eval", "iris", "--model", tmp_path / "m.txt")[0] == 2


def test_alpha_study(tmp_path, capsys):
    code, doc, _ = run(capsys, "alpha-study", "--alphas", "1.01,5", "--repeats", 3, "--csv", tmp_path / "a.csv")
    assert code == 0
    assert [row["alpha"] for row in doc["table"]] == [1.01, 5.0]
    assert all(row["horizontal"] + row["vertical"] == 3 for row in doc["table"])
    lines = (tmp_path / "a.csv").read_text().splitlines()
    assert lines[0] == "alpha,run,angle_deg,direction" and len(lines) == 7


def test_synth_invalid_spec(tmp_path, capsys):
    assert run(capsys, "synth", "--n-per-class", 0, "--out", tmp_path / "s.csv")[0] == 2


def test_missing_file(capsys):
    assert run(capsys, "check-id", "/nonexistent/file.csv")[0] == 2
