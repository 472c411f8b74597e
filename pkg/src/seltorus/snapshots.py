"""Binary state snapshots with bit-exact round trips.

Layout (little endian):

    bytes 0..7    magic "SELTORUS"
    u32           format version, currently 1
    u32           grid size N
    u32           channel count C
    f64           simulation time
    C * N * N     float64 samples, channel by channel, each row-major

A full flow state is stored as C = 5 (two velocity channels then three
director channels).
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"SELTORUS"
VERSION = 1
_HEADER = struct.Struct("<8sIII d")


def write_snapshot(path, time: float, data: np.ndarray) -> None:
    """Write a (C, N, N) float array; overwrites the target file."""
    if data.ndim != 3 or data.shape[1] != data.shape[2]:
        raise ValueError(f"expected (C, N, N) data, got shape {data.shape}")
    c, n, _ = data.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, n, c, float(time)))
        fh.write(np.ascontiguousarray(data, dtype="<f8").tobytes())


def read_snapshot(path) -> tuple[float, np.ndarray]:
    """Read a snapshot back as (time, (C, N, N) array)."""
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise ValueError(f"{path}: truncated snapshot header")
        magic, version, n, c, time = _HEADER.unpack(header)
        if magic != MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        if version != VERSION:
            raise ValueError(f"{path}: unsupported snapshot version {version}")
        raw = fh.read(c * n * n * 8)
        if len(raw) != c * n * n * 8:
            raise ValueError(f"{path}: truncated snapshot payload")
    data = np.frombuffer(raw, dtype="<f8").reshape(c, n, n).copy()
    return time, data


def write_state_snapshot(path, state) -> None:
    write_snapshot(path, state.t, np.concatenate((state.v, state.u), axis=0))


def read_state_snapshot(path) -> tuple[float, np.ndarray, np.ndarray]:
    """Returns (time, v, u) from a 5-channel state snapshot."""
    time, data = read_snapshot(path)
    if data.shape[0] != 5:
        raise ValueError(f"{path}: expected 5 channels, got {data.shape[0]}")
    return time, data[:2], data[2:]
