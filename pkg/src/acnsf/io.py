"""Checkpoints and diagnostics output.

Checkpoint layout (all little-endian):

    6 bytes   magic b"ACNSF1"
    u32       format version
    u32       dim
    dim x u32 points per axis
    5 x f64   length, eps, mu, kappa, t
    f64 data  physical-space samples, C order: u_1 .. u_d, theta, p

Fields are stored in physical space so the file does not depend on an FFT
index convention.  On load the spectral coefficients are recomputed and the
Hermitian defect of the result is checked.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ac_solver import DIAGNOSTIC_COLUMNS, ACState
from .spectral import GridSpec, SpectralField, VectorField, forward, hermitian_defect

__all__ = [
    "MAGIC",
    "FORMAT_VERSION",
    "CheckpointError",
    "Checkpoint",
    "encode_checkpoint",
    "decode_checkpoint",
    "write_checkpoint",
    "read_checkpoint",
    "emit_diagnostics",
]

MAGIC = b"ACNSF1"
FORMAT_VERSION = 1
_HERMITIAN_DRIFT = 1e-12


class CheckpointError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Checkpoint:
    """Raw checkpoint content: header values and physical arrays (u components, theta, p)."""

    shape: tuple[int, ...]
    length: float
    eps: float
    mu: float
    kappa: float
    t: float
    fields: np.ndarray  # (dim + 2, n, ..., n) float64

    @classmethod
    def from_state(cls, state: ACState) -> "Checkpoint":
        fields = np.concatenate([state.u.physical(), state.theta.physical()[None], state.p.physical()[None]])
        g = state.grid
        return cls(g.shape, g.length, state.eps, state.mu, state.kappa, state.t, np.ascontiguousarray(fields))

    def to_state(self, grid: GridSpec | None = None) -> ACState:
        dim = len(self.shape)
        if len(set(self.shape)) != 1:
            raise CheckpointError(f"non-cubic grid {self.shape} is not supported")
        if grid is None:
            grid = GridSpec(dim, self.shape[0], self.length)
        elif grid.shape != self.shape or not np.isclose(grid.length, self.length, rtol=1e-15):
            raise CheckpointError(
                f"checkpoint grid {self.shape} (length {self.length:g}) does not match requested grid "
                f"{grid.shape} (length {grid.length:g})"
            )
        coeffs = forward(self.fields, dim)
        drift = hermitian_defect(coeffs, dim)
        if drift > _HERMITIAN_DRIFT:
            raise CheckpointError(f"Hermitian drift {drift:.3e} after load")
        u = VectorField(grid, coeffs[:dim])
        return ACState(u, SpectralField(grid, coeffs[dim]), SpectralField(grid, coeffs[dim + 1]),
                       self.eps, self.mu, self.kappa, self.t)


def encode_checkpoint(ck: Checkpoint) -> bytes:
    dim = len(ck.shape)
    head = MAGIC + struct.pack(f"<II{dim}I5d", FORMAT_VERSION, dim, *ck.shape, ck.length, ck.eps, ck.mu, ck.kappa, ck.t)
    return head + np.asarray(ck.fields, dtype="<f8").tobytes(order="C")


def decode_checkpoint(data: bytes) -> Checkpoint:
    if data[: len(MAGIC)] != MAGIC:
        raise CheckpointError("not an ACNSF1 checkpoint")
    pos = len(MAGIC)
    if len(data) < pos + 8:
        raise CheckpointError("truncated checkpoint header")
    version, dim = struct.unpack_from("<II", data, pos)
    if version != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version} (this reader handles {FORMAT_VERSION})")
    if dim not in (2, 3):
        raise CheckpointError(f"invalid dimension {dim} in checkpoint header")
    pos += 8
    fmt = f"<{dim}I5d"
    if len(data) < pos + struct.calcsize(fmt):
        raise CheckpointError("truncated checkpoint header")
    vals = struct.unpack_from(fmt, data, pos)
    pos += struct.calcsize(fmt)
    shape = tuple(vals[:dim])
    length, eps, mu, kappa, t = vals[dim:]
    count = (dim + 2) * int(np.prod(shape))
    if len(data) != pos + 8 * count:
        raise CheckpointError(f"truncated checkpoint: expected {pos + 8 * count} bytes, found {len(data)}")
    fields = np.frombuffer(data, dtype="<f8", count=count, offset=pos).astype(np.float64).reshape((dim + 2,) + shape)
    return Checkpoint(shape, length, eps, mu, kappa, t, fields)


def write_checkpoint(state: ACState, path) -> None:
    Path(path).write_bytes(encode_checkpoint(Checkpoint.from_state(state)))


def read_checkpoint(path, grid: GridSpec | None = None) -> ACState:
    return decode_checkpoint(Path(path).read_bytes()).to_state(grid)


def emit_diagnostics(records, fmt: str = "csv") -> str:
    """Diagnostics records as CSV (17 significant digits) or NDJSON."""
    records = list(records)
    if not records:
        raise ValueError("no diagnostics records to emit")
    if fmt == "csv":
        lines = [",".join(DIAGNOSTIC_COLUMNS)]
        lines += [",".join(f"{x:.17g}" for x in rec.row()) for rec in records]
        return "\n".join(lines) + "\n"
    if fmt == "ndjson":
        return "".join(json.dumps(dict(zip(DIAGNOSTIC_COLUMNS, rec.row()))) + "\n" for rec in records)
    raise ValueError(f"unknown diagnostics format {fmt!r}")
