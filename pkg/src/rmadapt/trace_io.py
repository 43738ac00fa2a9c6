"""Trace export.

CSV: header ``step,x0,...,x{m-1},accepted,sigma`` (or a chosen subset of
coordinates), one row per iteration, 6 significant digits.

Binary (``RMT1``), all little-endian, no padding::

    offset 0   4 bytes   magic b"RMT1"
    offset 4   uint32    m, number of coordinates per record
    offset 8   uint64    T, number of records
    offset 16  T records of
                 uint64   step (0-based)
                 float64  sigma used for the proposal
                 uint8    accepted (0/1)
                 float64  state[m]
"""
from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .samplers import ChainTrace

__all__ = ["MAGIC", "read_trace_binary", "record_dtype", "write_trace_binary", "write_trace_csv"]

MAGIC = b"RMT1"
_HEADER = struct.Struct("<4sIQ")


def record_dtype(m: int) -> np.dtype:
    return np.dtype([("step", "<u8"), ("sigma", "<f8"), ("accepted", "u1"), ("state", "<f8", (m,))])


def write_trace_csv(trace: ChainTrace, path, coords=None) -> None:
    coords = list(range(trace.dim)) if coords is None else list(coords)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", *[f"x{c}" for c in coords], "accepted", "sigma"])
        for t in range(len(trace)):
            w.writerow([t, *[format(trace.states[t, c], ".6g") for c in coords],
                        int(trace.accepted[t]), format(trace.sigma_path[t], ".6g")])


def write_trace_binary(trace: ChainTrace, path) -> None:
    T, m = len(trace), trace.dim
    rec = np.zeros(T, dtype=record_dtype(m))
    rec["step"] = np.arange(T)
    rec["sigma"] = trace.sigma_path
    rec["accepted"] = trace.accepted
    rec["state"] = trace.states.reshape(T, m)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, m, T))
        fh.write(rec.tobytes())


def read_trace_binary(path) -> dict:
    """Returns ``{"step", "sigma", "accepted", "states"}`` arrays."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError("file too short for an RMT1 header")
    magic, m, T = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    dt = record_dtype(m)
    if len(raw) != _HEADER.size + T * dt.itemsize:
        raise ValueError("record section length does not match header")
    rec = np.frombuffer(raw, dtype=dt, count=T, offset=_HEADER.size)
    return {"step": rec["step"].astype(np.int64), "sigma": rec["sigma"].copy(),
            "accepted": rec["accepted"].astype(bool), "states": rec["state"].copy()}
