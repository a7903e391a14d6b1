"""Single-file binary checkpoints plus the CSV/JSON codecs used by the harness.

Layout::

    MHDCKPT <version>\\n
    key=value\\n ...
    END\\n
    <payload: little-endian float64, component-major, x2 fastest>

The header is ASCII and self-describing: grid dimensions, lengths, the
conormal weight parameters, lambda, time, component names, EOS tag and
the payload byte count.
"""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile

import numpy as np

from .grid import build_grid
from .state import COMPONENTS, StateField

MAGIC = b"MHDCKPT"
VERSION = 1
_DTYPE = np.dtype("<f8")


class CheckpointError(ValueError):
    """Malformed, truncated or non-finite checkpoint."""


def encode(state, grid, time=0.0, eos="exp", extra=None):
    """Serialize a StateField (or a (7, n1, n2) array plus ``lam`` in ``extra``) to bytes."""
    if isinstance(state, StateField):
        data, lam = state.data, state.lam
    else:
        data = np.asarray(state)
        lam = (extra or {}).get("lam")
        if lam is None:
            raise CheckpointError("lambda required for raw arrays")
    data = np.asarray(data, dtype=float)
    if data.shape != (len(COMPONENTS), grid.n1, grid.n2):
        raise CheckpointError(f"state shape {data.shape} does not match grid")
    if not np.all(np.isfinite(data)):
        raise CheckpointError("non-finite values in state")
    payload = np.ascontiguousarray(data, dtype=_DTYPE).tobytes()
    header = {
        "n1": grid.n1,
        "n2": grid.n2,
        "L1": repr(grid.L1),
        "L2": repr(grid.L2),
        "sigma": ";".join(f"{k}:{v}" for k, v in grid.sigma_params.items()),
        "lambda": repr(float(lam)),
        "time": repr(float(time)),
        "components": ",".join(COMPONENTS),
        "eos": eos,
        "payload_bytes": len(payload),
    }
    for k, v in (extra or {}).items():
        if k != "lam":
            header[f"x.{k}"] = v
    lines = [MAGIC + b" " + str(VERSION).encode()]
    for k, v in header.items():
        s = f"{k}={v}"
        if "\n" in s:
            raise CheckpointError("header values may not contain newlines")
        lines.append(s.encode("ascii"))
    lines.append(b"END")
    return b"\n".join(lines) + b"\n" + payload


def decode(blob):
    """Inverse of :func:`encode`; returns ``(StateField, grid, meta)``."""
    first, _, rest = blob.partition(b"\n")
    parts = first.split(b" ")
    if len(parts) != 2 or parts[0] != MAGIC:
        raise CheckpointError("bad magic")
    try:
        version = int(parts[1])
    except ValueError as exc:
        raise CheckpointError("bad version field") from exc
    if version != VERSION:
        raise CheckpointError(f"unsupported version {version}")
    meta = {}
    while True:
        line, sep, rest = rest.partition(b"\n")
        if not sep:
            raise CheckpointError("header not terminated")
        if line == b"END":
            break
        k, eq, v = line.decode("ascii").partition("=")
        if not eq:
            raise CheckpointError(f"malformed header line {line!r}")
        meta[k] = v
    try:
        n1, n2 = int(meta["n1"]), int(meta["n2"])
        comps = meta["components"].split(",")
        nbytes = int(meta["payload_bytes"])
        grid = build_grid(n1, n2, float(meta["L1"]), float(meta["L2"]))
        lam = float(meta["lambda"])
    except KeyError as exc:
        raise CheckpointError(f"missing header key {exc}") from exc
    if nbytes != 8 * len(comps) * n1 * n2:
        raise CheckpointError("header payload length inconsistent with dimensions")
    if len(rest) != nbytes:
        raise CheckpointError(f"payload length mismatch: expected {nbytes}, found {len(rest)}")
    data = np.frombuffer(rest, dtype=_DTYPE).reshape(len(comps), n1, n2).astype(float)
    if not np.all(np.isfinite(data)):
        raise CheckpointError("non-finite values in payload")
    meta["time"] = float(meta["time"])
    meta["version"] = version
    return StateField(data, lam), grid, meta


def _atomic_write(path, blob, mode="wb"):
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_checkpoint(state, grid, path, time=0.0, eos="exp", extra=None):
    """Atomically write a checkpoint; returns the byte count."""
    blob = encode(state, grid, time, eos, extra)
    _atomic_write(path, blob)
    return len(blob)


def read_checkpoint(path):
    with open(path, "rb") as fh:
        return decode(fh.read())


def format_float(x):
    return repr(float(x))


def table_to_csv(columns, rows):
    """Rows are sequences matching ``columns``; floats use shortest round-trip repr."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([format_float(x) if isinstance(x, (float, np.floating)) else x for x in r])
    return buf.getvalue()


def csv_to_table(text):
    rd = csv.reader(io.StringIO(text))
    columns = next(rd)
    rows = [[float(x) for x in r] for r in rd if r]
    return columns, rows


def write_text(path, text):
    _atomic_write(path, text.encode("utf-8"))


def dump_json(obj):
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
