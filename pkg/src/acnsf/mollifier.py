"""Friedrichs mollifiers and empirical checks of the two smoothing inequalities.

The kernel is the standard bump j(x) = c exp(-1/(1 - |x|^2)) on |x| < 1,
dilated as j_a(x) = a^{-d} j(x/a).  On the torus convolution with j_a is the
Fourier multiplier J(a|k|) / J(0), where J is the radial transform of the
unnormalized bump

    d = 3:  J(xi) = 4 pi  int_0^1 b(r) r^2 sin(xi r)/(xi r) dr
    d = 2:  J(xi) = 2 pi  int_0^1 b(r) r J0(xi r) dr

evaluated with Gauss-Legendre quadrature.  The multiplier depends on k only
through the integer |m|^2, so it is tabulated on those integers.

The two checks report, per scale a,

    y1:  ||f - f*j_a||_{L^p} / (a^{1 - sigma} ||grad f||_{L^2}),   sigma = d(1/2 - 1/p)
    y2:  ||f*j_a||_{L^p} / (a^{-s - d(1/q - 1/p)} ||f||_{W^{-s,q}})
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

from .norms import NormSpec, lebesgue_norm, spatial_norm
from .spectral import GridSpec, SpectralField, VectorField, inverse

__all__ = [
    "MollifierSpec",
    "RatioTable",
    "bump",
    "kernel_transform",
    "kernel_multiplier",
    "sample_kernel",
    "kernel_mass",
    "mollify",
    "check_friedrichs_y1",
    "check_friedrichs_y2",
    "power_law_field",
]

_MIN_NODES = 200


def bump(r: np.ndarray) -> np.ndarray:
    """Unnormalized bump exp(-1/(1 - r^2)) for r < 1, zero outside."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = r < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - r[inside] ** 2))
    return out


def _radial_transform(xi: np.ndarray, dim: int) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    nodes = max(_MIN_NODES, int(2 * np.max(xi, initial=0.0)) + 1)
    x, w = np.polynomial.legendre.leggauss(nodes)
    r = 0.5 * (x + 1.0)
    w = 0.5 * w * bump(r)
    arg = np.outer(xi.ravel(), r)
    if dim == 3:
        vals = 4 * np.pi * (np.sinc(arg / np.pi) * (w * r * r)).sum(axis=1)
    elif dim == 2:
        vals = 2 * np.pi * (special.j0(arg) * (w * r)).sum(axis=1)
    else:
        raise ValueError(f"dim must be 2 or 3, got {dim}")
    return vals.reshape(xi.shape)


def kernel_transform(xi, dim: int) -> np.ndarray:
    """Normalized transform of the unit-mass bump at radial frequency xi (1 at xi = 0)."""
    xi = np.asarray(xi, dtype=float)
    # same node count for the normalization so that the value at 0 is exactly 1
    vals = _radial_transform(np.concatenate([[0.0], xi.ravel()]), dim)
    return (vals[1:] / vals[0]).reshape(xi.shape)


@dataclass(frozen=True)
class MollifierSpec:
    alpha: float

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")

    def check_resolved(self, grid: GridSpec) -> None:
        if self.alpha < 4 * grid.spacing:
            raise ValueError(
                f"mollifier_lab.mollify: alpha={self.alpha:g} under-resolved; need alpha >= 4 h = {4 * grid.spacing:g}"
            )
        if self.alpha > grid.length / 4:
            raise ValueError(
                f"mollifier_lab.mollify: support radius alpha={self.alpha:g} exceeds length/4 = {grid.length / 4:g}"
            )


def _integer_k2(grid: GridSpec) -> np.ndarray:
    m = grid.mode_index.astype(np.int64)
    out = np.zeros(grid.shape, dtype=np.int64)
    for ax in range(grid.dim):
        shape = [1] * grid.dim
        shape[ax] = grid.n
        out = out + (m**2).reshape(shape)
    return out


def kernel_multiplier(grid: GridSpec, spec: MollifierSpec) -> np.ndarray:
    """Fourier multiplier of j_alpha on the grid's modes."""
    m2 = _integer_k2(grid)
    levels, index = np.unique(m2, return_inverse=True)
    xi = spec.alpha * (2 * np.pi / grid.length) * np.sqrt(levels)
    return kernel_transform(xi, grid.dim)[index.reshape(grid.shape)]


def sample_kernel(grid: GridSpec, spec: MollifierSpec) -> np.ndarray:
    """Point values of j_alpha on the grid (nearest periodic image of the origin)."""
    x = grid.coords
    x = np.where(x > grid.length / 2, x - grid.length, x)
    r = np.sqrt(np.sum(x**2, axis=0)) / spec.alpha
    norm = _radial_transform(np.zeros(1), grid.dim)[0]
    return bump(r) / (norm * spec.alpha**grid.dim)


def kernel_mass(grid: GridSpec, spec: MollifierSpec) -> float:
    """Rectangle-rule mass of the sampled kernel; 1 when the kernel is resolved."""
    return float(np.sum(sample_kernel(grid, spec)) * grid.volume / grid.size)


def mollify(f, spec: MollifierSpec):
    """f * j_alpha as a Fourier multiplier (scalar or vector field)."""
    grid = f.grid
    spec.check_resolved(grid)
    return type(f)(grid, kernel_multiplier(grid, spec) * f.coeffs)


@dataclass(frozen=True)
class RatioTable:
    kind: str
    alphas: tuple[float, ...]
    numerators: tuple[float, ...]
    bounds: tuple[float, ...]
    ratios: tuple[float, ...]
    params: dict = field(default_factory=dict)

    @property
    def max_ratio(self) -> float:
        return max(self.ratios)

    @property
    def finite(self) -> bool:
        return all(math.isfinite(r) for r in self.ratios)

    @property
    def slope(self) -> float:
        """Log-log slope of the numerator against alpha (nan if any numerator vanishes)."""
        a = np.asarray(self.alphas)
        v = np.asarray(self.numerators)
        if len(a) < 2 or np.any(v <= 0):
            return float("nan")
        return float(stats.linregress(np.log(a), np.log(v)).slope)

    def csv_rows(self) -> list[str]:
        rows = ["alpha,numerator,bound,ratio"]
        for row in zip(self.alphas, self.numerators, self.bounds, self.ratios):
            rows.append(",".join(f"{x:.17g}" for x in row))
        return rows


def _ratio(num: float, bound: float, scale: float) -> float:
    if num <= 1e-14 * max(scale, 1e-300):
        return 0.0
    if bound == 0:
        return float("inf")
    return num / bound


def _lp(coeffs: np.ndarray, grid: GridSpec, p: float) -> float:
    if p == 2:
        return float(np.sqrt(grid.volume * np.sum(np.abs(coeffs) ** 2)))
    return lebesgue_norm(inverse(coeffs, grid.dim), grid, p)


def _gradient_l2(f: SpectralField) -> float:
    grid = f.grid
    k2 = _integer_k2(grid) * (2 * np.pi / grid.length) ** 2
    return float(np.sqrt(grid.volume * np.sum(k2 * np.abs(f.coeffs) ** 2)))


def check_friedrichs_y1(f: SpectralField, alphas, p: float) -> RatioTable:
    grid = f.grid
    upper = 6.0 if grid.dim == 3 else math.inf
    if not 2 <= p <= upper or (grid.dim == 2 and math.isinf(p)):
        rng = "[2, 6]" if grid.dim == 3 else "[2, inf)"
        raise ValueError(f"mollifier_lab.check_friedrichs_y1: p={p} outside {rng} for d={grid.dim}")
    sigma = grid.dim * (0.5 - 1.0 / p)
    grad = _gradient_l2(f)
    scale = _lp(f.coeffs, grid, p)
    nums, bounds, ratios = [], [], []
    for a in alphas:
        spec = MollifierSpec(a)
        spec.check_resolved(grid)
        num = _lp(f.coeffs * (1.0 - kernel_multiplier(grid, spec)), grid, p)
        bound = a ** (1 - sigma) * grad
        nums.append(num)
        bounds.append(bound)
        ratios.append(_ratio(num, bound, scale))
    return RatioTable("y1", tuple(alphas), tuple(nums), tuple(bounds), tuple(ratios), {"p": p, "sigma": sigma})


def check_friedrichs_y2(f: SpectralField, alphas, s: float, q: float, p: float) -> RatioTable:
    grid = f.grid
    if q > p:
        raise ValueError(f"mollifier_lab.check_friedrichs_y2: need q <= p, got q={q}, p={p}")
    if s < 0:
        raise ValueError(f"mollifier_lab.check_friedrichs_y2: need s >= 0, got {s}")
    inv_p = 0.0 if math.isinf(p) else 1.0 / p
    inv_q = 0.0 if math.isinf(q) else 1.0 / q
    fnorm = spatial_norm(f, NormSpec(r=q, s=-s))
    nums, bounds, ratios = [], [], []
    for a in alphas:
        spec = MollifierSpec(a)
        spec.check_resolved(grid)
        num = _lp(f.coeffs * kernel_multiplier(grid, spec), grid, p)
        bound = a ** (-s - grid.dim * (inv_q - inv_p)) * fnorm
        nums.append(num)
        bounds.append(bound)
        ratios.append(_ratio(num, bound, fnorm))
    return RatioTable("y2", tuple(alphas), tuple(nums), tuple(bounds), tuple(ratios), {"s": s, "q": q, "p": p})


def power_law_field(grid: GridSpec, exponent: float, seed: int = 0) -> SpectralField:
    """Random real mean-zero field with coefficient modulus |k|^{-exponent}, unit L2 norm.

    With exponent = d/2 + 1 + delta the field lies in H^1 but in no H^{1+2 delta'}
    for delta' > delta, so mollification errors decay at the borderline rate.
    """
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(grid.shape)
    c = np.fft.fftn(noise) / grid.size
    mag = np.abs(c)
    mag[mag == 0] = 1.0
    k2 = _integer_k2(grid).astype(float)
    k2[(0,) * grid.dim] = 1.0
    c *= k2 ** (-exponent / 2) / mag
    c[(0,) * grid.dim] = 0.0
    nyq = np.zeros(grid.shape, dtype=bool)
    for ax in range(grid.dim):
        idx = [slice(None)] * grid.dim
        idx[ax] = grid.n // 2
        nyq[tuple(idx)] = True
    c[nyq] = 0.0
    c /= np.sqrt(grid.volume * np.sum(np.abs(c) ** 2))
    return SpectralField(grid, c)
