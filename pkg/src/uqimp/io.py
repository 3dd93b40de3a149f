"""CSV/JSON readers and writers for datasets, external predictions,
importance curves, pruning reports and replication tables."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .datagen import Dataset
from .importance import ImportanceCurve
from .predict import ExternalPredictions
from .pruning import PruningReport

__all__ = [
    "SchemaError",
    "write_dataset",
    "read_dataset",
    "read_external_predictions",
    "write_external_predictions",
    "write_curve_csv",
    "read_curve_csv",
    "write_json",
    "write_kept_matrix",
]


class SchemaError(ValueError):
    pass


def _fmt(v: float) -> str:
    # shortest repr that round-trips IEEE-754 doubles
    return repr(float(v))


def _to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        return [_to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _to_jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def write_json(obj, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_to_jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path


def _write_rows(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(row)


def _read_matrix(path: Path):
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        rows = [r for r in reader if r]
    try:
        M = np.array([[float(v) for v in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise SchemaError(f"{path}: non-numeric entry ({exc})") from None
    if rows and any(len(r) != len(header) for r in rows):
        raise SchemaError(f"{path}: ragged rows")
    if M.size and not np.all(np.isfinite(M)):
        raise SchemaError(f"{path}: non-finite values")
    return header, M.reshape(len(rows), len(header))


def write_dataset(data: Dataset, path) -> Path:
    """``y,x1,...,xp`` CSV plus a ``.json`` metadata sidecar."""
    path = Path(path)
    header = ["y"] + [f"x{j + 1}" for j in range(data.p)]
    rows = ([_fmt(y)] + [_fmt(v) for v in x] for y, x in zip(data.y, data.X))
    _write_rows(path, header, rows)
    write_json(data.meta, path.with_suffix(".json"))
    return path


def read_dataset(path) -> Dataset:
    path = Path(path)
    header, M = _read_matrix(path)
    expected = ["y"] + [f"x{j + 1}" for j in range(len(header) - 1)]
    if len(header) < 2 or header != expected:
        raise SchemaError(f"{path}: header must be y,x1,...,xp (got {','.join(header)})")
    meta = {}
    side = path.with_suffix(".json")
    if side.exists():
        meta = json.loads(side.read_text())
    meta.setdefault("source", str(path))
    return Dataset(M[:, 1:], M[:, 0], meta)


def write_external_predictions(ext: ExternalPredictions, path) -> Path:
    path = Path(path)
    header = ["yhat"] + [f"g{j + 1}" for j in range(ext.grad.shape[1])]
    rows = ([_fmt(y)] + [_fmt(v) for v in g] for y, g in zip(ext.yhat, ext.grad))
    _write_rows(path, header, rows)
    return path


def read_external_predictions(path, data: Dataset | None = None) -> ExternalPredictions:
    path = Path(path)
    header, M = _read_matrix(path)
    expected = ["yhat"] + [f"g{j + 1}" for j in range(len(header) - 1)]
    if len(header) < 2 or header != expected:
        raise SchemaError(f"{path}: header must be yhat,g1,...,gp")
    if data is not None:
        if M.shape[0] != data.n:
            raise SchemaError(f"{path}: {M.shape[0]} rows but dataset has {data.n}")
        if M.shape[1] - 1 != data.p:
            raise SchemaError(f"{path}: {M.shape[1] - 1} gradient columns but dataset has p={data.p}")
    return ExternalPredictions(M[:, 0], M[:, 1:], source=str(path))


def write_curve_csv(curve: ImportanceCurve, path) -> Path:
    """One row per tau, one column per feature."""
    header = ["tau"] + [f"beta{j + 1}" for j in range(curve.p)]
    rows = ([_fmt(t)] + [_fmt(v) for v in b] for t, b in zip(curve.taus, curve.beta))
    path = Path(path)
    _write_rows(path, header, rows)
    return path


def read_curve_csv(path):
    header, M = _read_matrix(path)
    if not header or header[0] != "tau":
        raise SchemaError(f"{path}: first column must be tau")
    return M[:, 0], M[:, 1:]


def write_kept_matrix(report: PruningReport, p: int, path) -> Path:
    """Compact feature x tau keep/drop matrix (1 = kept) with a final column."""
    taus = [r.tau for r in report.per_tau]
    K = report.kept_matrix(p)
    header = ["feature"] + [f"tau={_fmt(t)}" for t in taus] + ["final"]
    rows = (
        [f"x{j + 1}"] + [str(int(K[k, j])) for k in range(len(taus))] + [str(int(j in report.kept))]
        for j in range(p)
    )
    path = Path(path)
    _write_rows(path, header, rows)
    return path
