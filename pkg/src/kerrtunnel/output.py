"""Artifact writing: atomic files, commented CSV, JSON sidecars and the Husimi binary format.

CSV files carry ``#`` comment lines, then one header row, then data rows,
with LF line endings. Floats are written with ``repr`` so they round-trip
exactly.

Husimi binary layout (all header lines ASCII, LF terminated)::

    KTHUSIMI 1
    nq <int>
    np <int>
    bounds <q_min> <q_max> <p_min> <p_max>
    spacing <dq> <dp>
    dtype float64-le
    order row-major p,q
    end
    <np * nq little-endian float64 values, row i holds p[i] for all q>
"""

from __future__ import annotations

import io
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

HUSIMI_MAGIC = "KTHUSIMI 1"


def _format(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if value is None:
        return ""
    return str(value)


def atomic_write_bytes(path, data: bytes) -> Path:
    """Write to a temporary file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def csv_text(header: Sequence[str], rows: Iterable[Sequence], comments: Sequence[str] = ()) -> str:
    buf = io.StringIO(newline="")
    for line in comments:
        buf.write(f"# {line}\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_format(v) for v in row) + "\n")
    return buf.getvalue()


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    header, rows = None, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            continue
        cells = line.split(",")
        if header is None:
            header = cells
        else:
            rows.append(cells)
    return header or [], rows


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if hasattr(obj, "value") and not isinstance(obj, (int, float, str)):
        return obj.value
    return obj


def husimi_bytes(q: np.ndarray, p: np.ndarray, values: np.ndarray) -> bytes:
    dq = float(q[1] - q[0]) if q.size > 1 else 0.0
    dp = float(p[1] - p[0]) if p.size > 1 else 0.0
    head = "\n".join([
        HUSIMI_MAGIC,
        f"nq {q.size}",
        f"np {p.size}",
        "bounds " + " ".join(repr(float(x)) for x in (q[0], q[-1], p[0], p[-1])),
        f"spacing {dq!r} {dp!r}",
        "dtype float64-le",
        "order row-major p,q",
        "end",
    ]) + "\n"
    body = np.ascontiguousarray(values, dtype="<f8").tobytes()
    return head.encode("ascii") + body


def read_husimi_binary(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Inverse of ``husimi_bytes``; returns (q, p, values)."""
    raw = Path(path).read_bytes()
    meta = {}
    pos = 0
    while True:
        end = raw.index(b"\n", pos)
        line = raw[pos:end].decode("ascii")
        pos = end + 1
        if line == "end":
            break
        key, _, rest = line.partition(" ")
        meta[key] = rest
    if meta.get("KTHUSIMI") != "1":
        raise ValueError(f"{path} is not a Husimi binary file")
    nq, np_ = int(meta["nq"]), int(meta["np"])
    q_min, q_max, p_min, p_max = map(float, meta["bounds"].split())
    values = np.frombuffer(raw[pos:], dtype="<f8").reshape(np_, nq)
    return np.linspace(q_min, q_max, nq), np.linspace(p_min, p_max, np_), values


class ArtifactWriter:
    """Collects the artifacts of one run; ``discard`` removes them after a failure."""

    def __init__(self, directory, sidecar_base: dict):
        self.directory = Path(directory)
        self.sidecar_base = sidecar_base
        self.written: list[Path] = []

    def _track(self, path: Path) -> Path:
        self.written.append(path)
        return path

    def csv(self, name: str, header, rows, comments=(), meta: Optional[dict] = None) -> Path:
        path = self._track(atomic_write_bytes(self.directory / name, csv_text(header, rows, comments).encode()))
        self.sidecar(path, meta or {})
        return path

    def binary(self, name: str, data: bytes, meta: Optional[dict] = None) -> Path:
        path = self._track(atomic_write_bytes(self.directory / name, data))
        self.sidecar(path, meta or {})
        return path

    def sidecar(self, artifact: Path, meta: dict) -> Path:
        doc = dict(self.sidecar_base)
        doc["artifact"] = artifact.name
        doc.update(meta)
        text = json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"
        return self._track(atomic_write_bytes(artifact.with_name(artifact.name + ".json"), text.encode()))

    def discard(self) -> None:
        for path in self.written:
            try:
                path.unlink()
            except FileNotFoundError:
                pass
        self.written.clear()
