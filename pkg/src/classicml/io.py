"""CSV ingestion and JSON model files.

CSV files are comma separated, UTF-8, with a header row; a label column, when
present, is named ``y``. Model files are JSON documents::

    {"schema_version": 1, "model_kind": ..., "payload": {...},
     "meta": {"seed": ..., "flags": {...}}}

Floats are written with Python's shortest round-trip repr, so loading a saved
model reproduces every number bit for bit.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import IO, Iterable, Sequence

import numpy as np

from .errors import InvalidParameterError, ShapeError
from .probability import JointTable

SCHEMA_VERSION = 1
LABEL_COLUMN = "y"


def fmt(x) -> str:
    """Numbers for human-facing output: 12 significant digits."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".12g")


def read_rows(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise InvalidParameterError(f"{path}: empty CSV (a header row is required)")
    header = [h.strip() for h in rows[0]]
    body = [[c.strip() for c in r] for r in rows[1:]]
    for i, r in enumerate(body, start=2):
        if len(r) != len(header):
            raise ShapeError(f"{path}: line {i} has {len(r)} fields, header has {len(header)}")
    return header, body


def _floats(rows: list[list[str]], path) -> np.ndarray:
    try:
        return np.array([[float(c) for c in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise InvalidParameterError(f"{path}: non-numeric value ({exc})") from None


def read_dataset(path, label_column: str | None = LABEL_COLUMN) -> tuple[np.ndarray, np.ndarray | None, list[str]]:
    """Feature matrix, optional label vector (column ``y``) and feature names."""
    header, body = read_rows(path)
    data = _floats(body, path) if body else np.zeros((0, len(header)))
    if label_column is not None and label_column in header:
        j = header.index(label_column)
        y = data[:, j]
        x = np.delete(data, j, axis=1)
        names = [h for i, h in enumerate(header) if i != j]
        return x, y, names
    return data, None, header


def read_matrix(path) -> np.ndarray:
    header, body = read_rows(path)
    return _floats(body, path)


def read_joint_table(path) -> JointTable:
    """First header cell names the class column; the rest are x labels.
    Each row: class label followed by counts (integers) or probabilities."""
    header, body = read_rows(path)
    if len(header) < 2:
        raise ShapeError(f"{path}: need a class column and at least one x column")
    h_labels = [r[0] for r in body]
    cells = [r[1:] for r in body]
    try:
        counts = np.array([[int(c) for c in r] for r in cells], dtype=np.int64)
    except ValueError:
        counts = _floats(cells, path)
    return JointTable(tuple(header[1:]), tuple(h_labels), counts)


def read_triples(path) -> np.ndarray:
    """Sparse ``word_id,doc_id,count`` rows (0-based ids) as a dense matrix."""
    header, body = read_rows(path)
    need = ["word_id", "doc_id", "count"]
    if [h.lower() for h in header] != need:
        raise ShapeError(f"{path}: header must be word_id,doc_id,count")
    try:
        trip = [(int(a), int(b), float(c)) for a, b, c in body]
    except ValueError as exc:
        raise InvalidParameterError(f"{path}: bad triple ({exc})") from None
    if not trip:
        raise InvalidParameterError(f"{path}: no triples")
    if min(min(a, b) for a, b, _ in trip) < 0:
        raise InvalidParameterError(f"{path}: ids must be nonnegative")
    n = max(a for a, _, _ in trip) + 1
    m = max(b for _, b, _ in trip) + 1
    g = np.zeros((n, m))
    for a, b, c in trip:
        g[a, b] += c
    return g


def write_csv(stream: IO[str], header: Sequence[str], rows: Iterable[Sequence]) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([v if isinstance(v, str) else fmt(v) for v in r])


# -- model files ------------------------------------------------------------


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def model_document(kind: str, payload: dict, seed: int | None = None, flags: dict | None = None) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "model_kind": kind,
        "payload": _jsonable(payload),
        "meta": {"seed": seed, "flags": _jsonable(flags or {})},
    }


def save_model(path, kind: str, payload: dict, seed: int | None = None, flags: dict | None = None) -> None:
    doc = model_document(kind, payload, seed, flags)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_model(path, kind: str | None = None) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InvalidParameterError(f"{path}: not a JSON model file ({exc})") from None
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise InvalidParameterError(f"{path}: unsupported schema_version {doc.get('schema_version')!r}")
    if kind is not None and doc.get("model_kind") != kind:
        raise InvalidParameterError(f"{path}: expected a {kind!r} model, found {doc.get('model_kind')!r}")
    return doc


# payload converters for the model types the CLI persists


def svm_payload(model) -> dict:
    return {
        "kernel": model.kernel.to_dict(),
        "nu": model.nu,
        "b": model.b,
        "support_points": model.support_points,
        "support_labels": model.support_labels,
        "support_multipliers": model.support_multipliers,
        "support_index": model.support_index,
        "train_multipliers": model.train_multipliers,
        "dual_objective": model.dual_objective,
        "max_violation": model.max_violation,
        "iterations": model.iterations,
        "converged": model.converged,
        "b_from_margin": model.b_from_margin,
    }


def svm_from_payload(p: dict):
    from .svm import KernelSpec, SvmModel

    pts = np.array(p["support_points"], dtype=float)
    if pts.size == 0:
        pts = pts.reshape(0, 0)
    return SvmModel(
        support_points=pts,
        support_labels=np.array(p["support_labels"], dtype=float),
        support_multipliers=np.array(p["support_multipliers"], dtype=float),
        b=float(p["b"]),
        kernel=KernelSpec.from_dict(p["kernel"]),
        nu=float(p["nu"]),
        train_multipliers=np.array(p["train_multipliers"], dtype=float),
        support_index=np.array(p["support_index"], dtype=int),
        dual_objective=float(p["dual_objective"]),
        max_violation=float(p["max_violation"]),
        iterations=int(p["iterations"]),
        converged=bool(p["converged"]),
        b_from_margin=bool(p["b_from_margin"]),
    )


def basis_payload(basis) -> dict:
    return {
        "basis": basis.basis,
        "values": basis.values,
        "center": basis.center,
        "spectrum": basis.spectrum,
        "n_samples": basis.n_samples,
    }


def basis_from_payload(p: dict):
    from .spectral import SpectralBasis

    return SpectralBasis(
        np.array(p["basis"], dtype=float),
        np.array(p["values"], dtype=float),
        np.array(p["center"], dtype=float),
        np.array(p["spectrum"], dtype=float),
        int(p["n_samples"]),
    )
