"""Discrete Lebesgue, Sobolev and mixed space-time norms on the torus.

A Sobolev norm of order s and integrability r is evaluated as "Fourier
multiplier, then grid quadrature": the Bessel multiplier (1 + |k|^2)^{s/2}
(or the Riesz multiplier |k|^s in the homogeneous case) is applied, the
result is brought to physical space and its L^r norm is taken with the
uniform rectangle rule.  L^inf is the grid maximum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectral import GridSpec, SpectralField, VectorField, inverse

__all__ = [
    "NormSpec",
    "AdmissiblePair",
    "spatial_norm",
    "space_time_norm",
    "time_norm",
    "wave_admissible",
]


@dataclass(frozen=True)
class NormSpec:
    q: float = 2.0
    r: float = 2.0
    s: float = 0.0
    homogeneous: bool = False

    def __post_init__(self):
        if self.q < 1 or self.r < 1:
            raise ValueError(f"exponents must be >= 1, got q={self.q}, r={self.r}")

    @property
    def label(self) -> str:
        kind = "Hdot" if self.homogeneous else "W"
        return f"L{_fmt(self.q)}_{kind}{_fmt(self.s)},{_fmt(self.r)}"


def _fmt(x: float) -> str:
    if math.isinf(x):
        return "inf"
    return f"{x:g}"


def sobolev_multiplier(grid: GridSpec, s: float, homogeneous: bool) -> np.ndarray | None:
    if s == 0:
        return None
    if not homogeneous:
        return (1.0 + grid.k2) ** (s / 2)
    k2 = grid.k2
    with np.errstate(divide="ignore"):
        mult = np.where(k2 > 0, np.where(k2 > 0, k2, 1.0) ** (s / 2), 0.0)
    return mult


def lebesgue_norm(values: np.ndarray, grid: GridSpec, r: float) -> float:
    """L^r norm of physical samples; a leading vector axis is combined pointwise (Euclidean)."""
    if values.ndim == grid.dim + 1:
        values = np.sqrt(np.sum(values**2, axis=0))
    else:
        values = np.abs(values)
    if math.isinf(r):
        return float(np.max(values))
    cell = grid.volume / grid.size
    return float((cell * np.sum(values**r)) ** (1.0 / r))


def spatial_norm(f: SpectralField | VectorField, spec: NormSpec) -> float:
    """W^{s,r} (or homogeneous) norm of a scalar or vector field."""
    grid = f.grid
    coeffs = f.coeffs
    if spec.homogeneous and spec.s < 0:
        means = coeffs[(Ellipsis,) + (0,) * grid.dim]
        scale = np.sqrt(np.sum(np.abs(coeffs) ** 2))
        if np.any(np.abs(means) > 1e-12 * max(scale, np.finfo(float).tiny)):
            raise ValueError("homogeneous negative-order norm needs a mean-zero field")
    mult = sobolev_multiplier(grid, spec.s, spec.homogeneous)
    if mult is not None:
        coeffs = mult * coeffs
    if spec.r == 2:
        # Parseval; avoids a transform
        return float(np.sqrt(grid.volume * np.sum(np.abs(coeffs) ** 2)))
    return lebesgue_norm(inverse(coeffs, grid.dim), grid, spec.r)


def time_norm(times, values, q: float) -> float:
    """(int |g(t)|^q dt)^{1/q} by the composite trapezoid rule; q = inf is the sample max."""
    times = np.asarray(times, dtype=float)
    values = np.abs(np.asarray(values, dtype=float))
    if math.isinf(q):
        return float(np.max(values)) if values.size else 0.0
    if times.size < 2:
        raise ValueError("need at least 2 time samples for a finite time exponent")
    steps = np.diff(times)
    if np.any(steps <= 0):
        raise ValueError("time samples must be strictly increasing")
    if not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
        raise ValueError("time sampling must be uniform")
    return float(np.trapezoid(values**q, times) ** (1.0 / q))


def space_time_norm(times, fields, spec: NormSpec) -> float:
    """L^q_t of the spatial norm over a time-sampled sequence of fields."""
    values = [spatial_norm(f, spec) for f in fields]
    return time_norm(times, values, spec.q)


@dataclass(frozen=True)
class AdmissiblePair:
    q: float
    r: float
    gamma: float
    dim: int
    admissible: bool


def wave_admissible(q: float, r: float, dim: int) -> AdmissiblePair:
    """Wave admissibility 2/q <= (d-1)(1/2 - 1/r) and the scaling index gamma."""
    if q < 2 or r < 2:
        raise ValueError(f"wave exponents must be >= 2, got q={q}, r={r}")
    if dim < 2:
        raise ValueError(f"dimension must be >= 2, got {dim}")
    inv_q = 0.0 if math.isinf(q) else 1.0 / q
    inv_r = 0.0 if math.isinf(r) else 1.0 / r
    lhs = 2 * inv_q
    rhs = (dim - 1) * (0.5 - inv_r)
    gamma = dim / 2 - inv_q - dim * inv_r
    return AdmissiblePair(q, r, gamma, dim, bool(lhs <= rhs + 1e-14))
