"""CSV input/output and dataset loaders.

Matrices are plain CSV, row-major, no header.  Datasets are CSV with one
sample per row, features first and an integer class label last.
"""

import csv
import hashlib

import numpy as np

from .ceml import Dataset
from .errors import InputError


def read_matrix_csv(path):
    try:
        M = np.loadtxt(path, delimiter=",", dtype=float, ndmin=2)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read matrix from {path}: {exc}") from exc
    if M.size == 0:
        raise InputError(f"{path} is empty")
    return M


def write_matrix_csv(path, M):
    np.savetxt(path, np.atleast_2d(M), delimiter=",", fmt="%.17g")


def read_dataset_csv(path, name=None):
    """Dataset from CSV with the integer label in the last column."""
    M = read_matrix_csv(path)
    if M.shape[1] < 2:
        raise InputError(f"{path}: need at least one feature column and a label column")
    labels = M[:, -1]
    if not np.all(labels == np.round(labels)):
        raise InputError(f"{path}: last column must hold integer labels")
    return Dataset(M[:, :-1], labels.astype(np.int64), name or str(path))


def write_dataset_csv(path, data):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for x, y in zip(data.features, data.labels):
            w.writerow([f"{v:.17g}" for v in x] + [int(y)])


def file_digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _encode(values):
    """Map arbitrary label tokens to 0..k-1 in order of first sorted appearance."""
    classes = sorted(set(values))
    index = {c: i for i, c in enumerate(classes)}
    return np.array([index[v] for v in values], dtype=np.int64)


def load_iris():
    from sklearn.datasets import load_iris as _load

    b = _load()
    return Dataset(b.data, b.target, "iris")


def load_wine():
    from sklearn.datasets import load_wine as _load

    b = _load()
    return Dataset(b.data, b.target, "wine")


def load_ionosphere(path):
    """UCI ``ionosphere.data``: 34 numeric features, label ``g``/``b`` last."""
    rows = _read_rows(path)
    return Dataset(
        np.array([[float(v) for v in r[:-1]] for r in rows]), _encode([r[-1] for r in rows]), "ionosphere"
    )


def load_balance_scale(path):
    """UCI ``balance-scale.data``: label ``L``/``B``/``R`` first, 4 numeric features."""
    rows = _read_rows(path)
    return Dataset(
        np.array([[float(v) for v in r[1:]] for r in rows]), _encode([r[0] for r in rows]), "balance-scale"
    )


def _read_rows(path):
    try:
        with open(path, newline="") as fh:
            return [[v.strip() for v in r] for r in csv.reader(fh) if r and any(v.strip() for v in r)]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


BUILTIN = {"iris": load_iris, "wine": load_wine}
RAW_UCI = {"ionosphere": load_ionosphere, "balance-scale": load_balance_scale}


def load_dataset(spec):
    """Resolve ``iris``, ``wine``, ``ionosphere:PATH``, ``balance-scale:PATH`` or a CSV path."""
    if spec in BUILTIN:
        return BUILTIN[spec]()
    kind, sep, path = spec.partition(":")
    if sep and kind in RAW_UCI:
        return RAW_UCI[kind](path)
    return read_dataset_csv(spec)
