"""Flat binary export of solution pairs.

Layout (all little-endian, no alignment gaps):

    offset  size                 field
    0       4                    magic b"MFGS"
    4       4                    format version, u32, currently 1
    8       4                    dim, u32
    12      4                    n, u32
    16      4                    nt, u32
    20      4                    reserved, u32 zero
    24      8                    t_final, f64
    32      (nt+1) n^dim * 8     u slices, f64, C order, time-major
    ...     (nt+1) n^dim * 8     m slices, same layout

The format is deliberately free of pickle and npy so any language can read
it from this table.
"""

from __future__ import annotations

import os
import struct

import numpy as np

from .errors import ConfigError
from .grid import TorusGrid

__all__ = ["write_solution", "read_solution"]

MAGIC = b"MFGS"
VERSION = 1
_HEADER = struct.Struct("<4sIIIIId")


def write_solution(path: str | os.PathLike, grid: TorusGrid, u: np.ndarray, m: np.ndarray) -> None:
    """Write a (u, m) pair for ``grid`` to ``path``."""
    u = grid.check_spacetime_field(u, "u")
    m = grid.check_spacetime_field(m, "m")
    header = _HEADER.pack(MAGIC, VERSION, grid.dim, grid.n, grid.nt, 0, grid.t_final)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(u, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(m, dtype="<f8").tobytes())


def read_solution(path: str | os.PathLike):
    """Read a solution file; returns (grid, u, m).

    Raises :class:`ConfigError` on malformed or truncated files.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise ConfigError(f"{path}: file too short for a solution header")
    magic, version, dim, n, nt, _, t_final = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise ConfigError(f"{path}: bad magic {magic!r}, not a solution file")
    if version != VERSION:
        raise ConfigError(f"{path}: unsupported format version {version}")
    try:
        grid = TorusGrid(dim=int(dim), n=int(n), t_final=float(t_final), nt=int(nt))
    except ValueError as exc:
        raise ConfigError(f"{path}: invalid grid header: {exc}") from exc
    count = (grid.nt + 1) * grid.num_nodes
    expected = _HEADER.size + 2 * count * 8
    if len(raw) != expected:
        raise ConfigError(
            f"{path}: expected {expected} bytes for the declared grid, got {len(raw)}"
        )
    shape = (grid.nt + 1,) + grid.shape
    body = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    u = body[:count].reshape(shape).astype(float)
    m = body[count:].reshape(shape).astype(float)
    return grid, u, m
