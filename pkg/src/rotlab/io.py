"""File formats: Matrix JSON, PhaseMatrix JSON, reports (JSON + flat CSV)."""

from __future__ import annotations

import csv
import datetime as _dt
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .config import Tolerances
from .errors import ParseError
from .reps import PhaseMatrix


def matrix_to_json(A) -> dict:
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2:
        raise ValueError("expected a 2-d array")
    return {
        "rows": int(A.shape[0]),
        "cols": int(A.shape[1]),
        "data": [[float(z.real), float(z.imag)] for z in A.ravel()],
    }


def matrix_from_json(obj: dict) -> np.ndarray:
    try:
        rows, cols, data = int(obj["rows"]), int(obj["cols"]), obj["data"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"not a Matrix JSON object: {exc}") from exc
    if rows < 1 or cols < 1 or len(data) != rows * cols:
        raise ParseError(f"data has {len(data)} entries, expected {rows}x{cols}")
    arr = np.array(data, dtype=float)
    if arr.shape != (rows * cols, 2):
        raise ParseError("each entry must be a [re, im] pair")
    if not np.all(np.isfinite(arr)):
        raise ParseError("matrix has non-finite entries")
    return (arr[:, 0] + 1j * arr[:, 1]).reshape(rows, cols)


def write_matrix(path, A) -> None:
    with open(path, "w") as fh:
        json.dump(matrix_to_json(A), fh)


def read_matrix(path) -> np.ndarray:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return matrix_from_json(obj)


def read_phase_matrix(path) -> PhaseMatrix:
    try:
        with open(path) as fh:
            return PhaseMatrix.from_json(json.load(fh))
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ParseError(f"{path}: {exc}") from exc


def write_phase_matrix(path, Theta: PhaseMatrix) -> None:
    with open(path, "w") as fh:
        json.dump(Theta.to_json(), fh, indent=1)


def write_tuple(out_dir, mats: Sequence[np.ndarray], prefix: str = "v", extra: dict | None = None) -> Path:
    """Write v1.json, v2.json, ... plus manifest.json; return the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for i, A in enumerate(mats, start=1):
        name = f"{prefix}{i}.json"
        write_matrix(out / name, A)
        files.append(name)
    manifest = {"matrices": files, "dimension": int(np.asarray(mats[0]).shape[0])}
    if extra:
        manifest.update(extra)
    path = out / "manifest.json"
    with open(path, "w") as fh:
        json.dump(_jsonable(manifest), fh, indent=1)
    return path


def read_tuple(paths: Iterable) -> list[np.ndarray]:
    """Read matrices from files; a manifest.json expands to the files it lists."""
    mats = []
    for p in paths:
        p = Path(p)
        if p.is_dir():
            p = p / "manifest.json"
        if p.name == "manifest.json":
            with open(p) as fh:
                manifest = json.load(fh)
            mats.extend(read_matrix(p.parent / f) for f in manifest["matrices"])
        else:
            mats.append(read_matrix(p))
    return mats


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def meta_block(tol: Tolerances, **extra) -> dict:
    meta = {
        "tool": "rotlab",
        "version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }
    meta.update(extra)
    return meta


def write_json_report(path, body: dict, tol: Tolerances, **meta_extra) -> None:
    """Report body plus tolerances; version and timestamp live under ``meta``."""
    doc = {"tolerances": tol.to_dict(), **_jsonable(body), "meta": meta_block(tol, **meta_extra)}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=False)
        fh.write("\n")


def write_csv(path, rows: Sequence[dict], columns: Sequence[str]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(columns), extrasaction="raise")
        w.writeheader()
        for row in rows:
            unknown = set(row) - set(columns)
            if unknown:
                raise ValueError(f"row has columns outside the schema: {sorted(unknown)}")
            w.writerow({c: _csv_cell(row.get(c)) for c in columns})


def _csv_cell(x):
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return x
