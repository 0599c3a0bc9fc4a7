"""Matrix JSON files and scan CSV output.

Matrix files are JSON objects ``{"rows": R, "cols": C, "data": [[re, im], ...]}``
with ``data`` in row-major order; an optional ``"metadata"`` object is
carried alongside. Vectors are stored as ``n x 1`` matrices.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .distinguishability import ScanResult
from .errors import ValidationError


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def matrix_to_dict(a, metadata: dict | None = None) -> dict:
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim == 1:
        a = a[:, None]
    out = {
        "rows": int(a.shape[0]),
        "cols": int(a.shape[1]),
        "data": [[float(z.real), float(z.imag)] for z in a.ravel()],
    }
    if metadata:
        out["metadata"] = metadata
    return out


def matrix_from_dict(obj) -> np.ndarray:
    try:
        rows, cols, data = int(obj["rows"]), int(obj["cols"]), obj["data"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed matrix object: {exc}") from exc
    if rows < 1 or cols < 1 or len(data) != rows * cols:
        raise ValidationError(f"matrix data has {len(data)} entries, expected {rows} x {cols}")
    try:
        arr = np.array([complex(float(re), float(im)) for re, im in data], dtype=np.complex128)
    except (TypeError, ValueError) as exc:
        raise ValidationError("matrix entries must be [re, im] pairs of numbers") from exc
    if not np.all(np.isfinite(arr)):
        raise ValidationError("matrix has non-finite entries")
    return arr.reshape(rows, cols)


def dumps(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def write_matrix(path, a, metadata: dict | None = None) -> None:
    atomic_write_text(path, dumps(matrix_to_dict(a, metadata)))


def read_matrix(path) -> np.ndarray:
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON ({exc})") from exc
    return matrix_from_dict(obj)


def read_vector(path) -> np.ndarray:
    a = read_matrix(path)
    if 1 not in a.shape:
        raise ValidationError(f"{path}: expected a vector, got shape {a.shape}")
    return a.ravel()


def write_json(path, obj) -> None:
    atomic_write_text(path, dumps(obj))


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def scan_to_csv(scan: ScanResult, metadata: dict | None = None) -> str:
    lines = ["epsilon,p_bunch,ratio,indistinguishability"]
    for row in scan.rows():
        lines.append(",".join(_fmt(x) for x in row))
    for key, value in sorted((metadata or {}).items()):
        lines.append(f"#{key}={value}")
    lines.append(f"#argmax_epsilon={_fmt(scan.argmax_epsilon)}")
    return "\n".join(lines) + "\n"


def read_scan_csv(path) -> tuple[np.ndarray, dict]:
    """Numeric rows and ``#key=value`` comment entries of a scan CSV."""
    rows, meta = [], {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "epsilon,p_bunch,ratio,indistinguishability":
            raise ValidationError(f"{path}: unexpected header {header!r}")
        for line in fh:
            line = line.strip()
            if line.startswith("#"):
                key, _, value = line[1:].partition("=")
                meta[key] = value
            elif line:
                rows.append([float(x) for x in line.split(",")])
    return np.array(rows), meta
