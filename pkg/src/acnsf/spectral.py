"""Fourier representation of real fields on a periodic box.

Coefficients are stored as full complex arrays in FFT index order and are
normalized so that ``coeffs[0, ..., 0]`` is the spatial mean.  Transforms
to physical space go through the real-to-complex FFT, so every stored array
is expected to be Hermitian symmetric.

Odd derivatives (gradient, divergence) use a wavevector table with the
Nyquist component set to zero; even multipliers (Laplacian and its inverse)
use the full ``|k|^2``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np
import scipy.fft as sfft

__all__ = [
    "GridSpec",
    "SpectralField",
    "VectorField",
    "make_grid",
    "to_spectral",
    "to_physical",
    "differential_operator",
    "gradient",
    "divergence",
    "laplacian",
    "inverse_laplacian",
    "dealias_product",
    "inner",
    "l2_norm",
    "hermitian_defect",
]

ALLOWED_PADS = (Fraction(3, 2), Fraction(2))


@dataclass(frozen=True)
class GridSpec:
    """Periodic box ``[0, length)^dim`` sampled with ``n`` points per axis."""

    dim: int
    n: int
    length: float = 2 * np.pi
    pad_factor: Fraction = Fraction(3, 2)

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if self.n % 2:
            raise ValueError("n must be even")
        if self.n < 8:
            raise ValueError(f"n must be at least 8, got {self.n}")
        if not self.length > 0:
            raise ValueError(f"length must be positive, got {self.length}")
        pad = Fraction(self.pad_factor).limit_denominator(16)
        if pad not in ALLOWED_PADS:
            raise ValueError(f"pad_factor must be 3/2 or 2, got {self.pad_factor}")
        object.__setattr__(self, "pad_factor", pad)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def size(self) -> int:
        return self.n**self.dim

    @property
    def volume(self) -> float:
        return self.length**self.dim

    @property
    def spacing(self) -> float:
        return self.length / self.n

    @property
    def padded_n(self) -> int:
        m = self.pad_factor * self.n
        if m.denominator != 1:
            raise ValueError(f"n={self.n} is not compatible with pad_factor {self.pad_factor}")
        return int(m)

    @cached_property
    def mode_index(self) -> np.ndarray:
        """Integer wavenumbers along one axis, FFT order, range -n/2+1..n/2."""
        m = np.fft.fftfreq(self.n, 1.0 / self.n).astype(int)
        m[self.n // 2] = self.n // 2
        return m

    @cached_property
    def k(self) -> np.ndarray:
        """Wavevectors, shape (dim, n, ..., n)."""
        k1 = self.mode_index * (2 * np.pi / self.length)
        return np.array(np.meshgrid(*([k1] * self.dim), indexing="ij"))

    @cached_property
    def k_deriv(self) -> np.ndarray:
        """Wavevectors with the Nyquist component zeroed (for odd derivatives)."""
        kd = self.k.copy()
        kd[self.nyquist_axis_mask] = 0.0
        return kd

    @cached_property
    def nyquist_axis_mask(self) -> np.ndarray:
        """mask[i] is True where the i-th wavevector component sits at n/2."""
        idx = np.array(np.meshgrid(*([self.mode_index] * self.dim), indexing="ij"))
        return idx == self.n // 2

    @cached_property
    def nyquist_mask(self) -> np.ndarray:
        return self.nyquist_axis_mask.any(axis=0)

    @cached_property
    def k2(self) -> np.ndarray:
        return np.sum(self.k**2, axis=0)

    @cached_property
    def kd2(self) -> np.ndarray:
        return np.sum(self.k_deriv**2, axis=0)

    @cached_property
    def kmag(self) -> np.ndarray:
        return np.sqrt(self.k2)

    @cached_property
    def coords(self) -> np.ndarray:
        """Physical grid points, shape (dim, n, ..., n)."""
        x1 = np.arange(self.n) * self.spacing
        return np.array(np.meshgrid(*([x1] * self.dim), indexing="ij"))

    def zeros(self) -> "SpectralField":
        return SpectralField(self, np.zeros(self.shape, dtype=complex))

    def vector_zeros(self) -> "VectorField":
        return VectorField(self, np.zeros((self.dim,) + self.shape, dtype=complex))


def make_grid(dim: int, n: int, length: float = 2 * np.pi, pad_factor=Fraction(3, 2)) -> GridSpec:
    """Validated grid constructor; the wavevector table is built eagerly."""
    grid = GridSpec(dim, n, float(length), Fraction(pad_factor))
    grid.k, grid.k_deriv  # noqa: B018 - warm the caches
    return grid


@dataclass(frozen=True, eq=False)
class SpectralField:
    grid: GridSpec
    coeffs: np.ndarray

    def __post_init__(self):
        if self.coeffs.shape != self.grid.shape:
            raise ValueError(f"coefficient shape {self.coeffs.shape} does not match grid {self.grid.shape}")

    def __add__(self, other):
        _check_same_grid(self, other)
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other):
        _check_same_grid(self, other)
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, c):
        return SpectralField(self.grid, self.coeffs * c)

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralField(self.grid, -self.coeffs)

    @property
    def mean(self) -> complex:
        return self.coeffs.flat[0]

    def physical(self) -> np.ndarray:
        return to_physical(self)


@dataclass(frozen=True, eq=False)
class VectorField:
    """d scalar fields on one grid, stored as a (dim, n, ..., n) array."""

    grid: GridSpec
    coeffs: np.ndarray

    def __post_init__(self):
        if self.coeffs.shape != (self.grid.dim,) + self.grid.shape:
            raise ValueError(f"vector coefficient shape {self.coeffs.shape} does not match grid")

    @classmethod
    def from_components(cls, components) -> "VectorField":
        components = list(components)
        grid = components[0].grid
        for c in components[1:]:
            _check_same_grid(components[0], c)
        return cls(grid, np.stack([c.coeffs for c in components]))

    @property
    def components(self) -> tuple[SpectralField, ...]:
        return tuple(SpectralField(self.grid, c) for c in self.coeffs)

    def __add__(self, other):
        _check_same_grid(self, other)
        return VectorField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other):
        _check_same_grid(self, other)
        return VectorField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, c):
        return VectorField(self.grid, self.coeffs * c)

    __rmul__ = __mul__

    def __neg__(self):
        return VectorField(self.grid, -self.coeffs)

    def physical(self) -> np.ndarray:
        return to_physical(self)


def _check_same_grid(a, b):
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")


# -- transforms ---------------------------------------------------------------

def _axes(dim: int) -> tuple[int, ...]:
    return tuple(range(-dim, 0))


def forward(f: np.ndarray, dim: int) -> np.ndarray:
    """Raw forward transform of real data over the last ``dim`` axes."""
    n = f.shape[-1]
    return sfft.fftn(f, axes=_axes(dim)) / n**dim


def inverse(c: np.ndarray, dim: int) -> np.ndarray:
    """Raw inverse transform of Hermitian coefficients over the last ``dim`` axes."""
    n = c.shape[-1]
    half = c[..., : n // 2 + 1]
    return sfft.irfftn(half * n**dim, s=(n,) * dim, axes=_axes(dim))


def to_spectral(f, grid: GridSpec):
    """Physical real array -> SpectralField (or VectorField for a leading axis of size dim)."""
    f = np.asarray(f, dtype=float)
    if f.shape == grid.shape:
        return SpectralField(grid, forward(f, grid.dim))
    if f.shape == (grid.dim,) + grid.shape:
        return VectorField(grid, forward(f, grid.dim))
    raise ValueError(f"array shape {f.shape} does not match grid shape {grid.shape}")


def to_physical(F) -> np.ndarray:
    return inverse(F.coeffs, F.grid.dim)


def hermitian_defect(coeffs: np.ndarray, dim: int) -> float:
    """max |c(k) - conj(c(-k))| relative to max |c| over the last ``dim`` axes."""
    axes = _axes(dim)
    mirrored = np.roll(np.flip(coeffs, axis=axes), 1, axis=axes)
    scale = np.max(np.abs(coeffs))
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(coeffs - np.conj(mirrored))) / scale)


# -- differential operators ---------------------------------------------------

def gradient(F: SpectralField) -> VectorField:
    return VectorField(F.grid, 1j * F.grid.k_deriv * F.coeffs)


def divergence(V: VectorField) -> SpectralField:
    return SpectralField(V.grid, np.sum(1j * V.grid.k_deriv * V.coeffs, axis=0))


def laplacian(F):
    return type(F)(F.grid, -F.grid.k2 * F.coeffs)


def inverse_laplacian(F):
    grid = F.grid
    means = F.coeffs[(Ellipsis,) + (0,) * grid.dim]
    scale = np.sqrt(np.sum(np.abs(F.coeffs) ** 2))
    if np.any(np.abs(means) > 1e-12 * max(scale, np.finfo(float).tiny)):
        raise ValueError("inverse Laplacian undefined on means")
    with np.errstate(divide="ignore", invalid="ignore"):
        mult = np.where(grid.k2 > 0, -1.0 / np.where(grid.k2 > 0, grid.k2, 1.0), 0.0)
    return type(F)(grid, mult * F.coeffs)


_OPERATORS = {
    "gradient": gradient,
    "divergence": divergence,
    "laplacian": laplacian,
    "inverse_laplacian": inverse_laplacian,
}


def differential_operator(F, kind: str):
    """Apply an exact Fourier multiplier: gradient, divergence, laplacian or inverse_laplacian."""
    try:
        op = _OPERATORS[kind]
    except KeyError:
        raise ValueError(f"unknown operator {kind!r}; expected one of {sorted(_OPERATORS)}") from None
    if kind == "gradient" and not isinstance(F, SpectralField):
        raise TypeError("gradient expects a SpectralField")
    if kind == "divergence" and not isinstance(F, VectorField):
        raise TypeError("divergence expects a VectorField")
    return op(F)


# -- quadrature -----------------------------------------------------------------

def inner(a, b) -> float:
    """L2 inner product over the box via Parseval."""
    _check_same_grid(a, b)
    return float(a.grid.volume * np.sum((np.conj(a.coeffs) * b.coeffs).real))


def l2_norm(a) -> float:
    return float(np.sqrt(a.grid.volume * np.sum(np.abs(a.coeffs) ** 2)))


# -- dealiasing -----------------------------------------------------------------

def _pad_axis(c: np.ndarray, axis: int, n: int, m: int) -> np.ndarray:
    shape = list(c.shape)
    shape[axis] = m
    out = np.zeros(shape, dtype=complex)
    h = n // 2
    src = np.moveaxis(c, axis, 0)
    dst = np.moveaxis(out, axis, 0)
    dst[:h] = src[:h]
    dst[m - h + 1:] = src[h + 1:]
    dst[h] = 0.5 * src[h]
    dst[m - h] = 0.5 * src[h]
    return out


def _truncate_axis(c: np.ndarray, axis: int, n: int, m: int) -> np.ndarray:
    shape = list(c.shape)
    shape[axis] = n
    out = np.empty(shape, dtype=complex)
    h = n // 2
    src = np.moveaxis(c, axis, 0)
    dst = np.moveaxis(out, axis, 0)
    dst[:h] = src[:h]
    dst[h + 1:] = src[m - h + 1:]
    dst[h] = src[h] + src[m - h]
    return out


def pad(c: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Zero-pad coefficients to the dealiasing grid (Nyquist split symmetrically)."""
    m = grid.padded_n
    for ax in _axes(grid.dim):
        c = _pad_axis(c, ax, grid.n, m)
    return c


def truncate(c: np.ndarray, grid: GridSpec) -> np.ndarray:
    m = grid.padded_n
    for ax in _axes(grid.dim):
        c = _truncate_axis(c, ax, grid.n, m)
    return c


def _negate_index(c: np.ndarray, axes) -> np.ndarray:
    """c(-k) along ``axes`` for FFT-ordered arrays."""
    return np.roll(np.flip(c, axis=axes), 1, axis=axes)


def _pad_half(c: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Full n-grid coefficients -> half-spectrum (rfft layout) on the padded grid."""
    n, m, h, d = grid.n, grid.padded_n, grid.n // 2, grid.dim
    c = c[..., : h + 1].copy()
    c[..., h] *= 0.5
    for ax in range(-d, -1):
        np.moveaxis(c, ax, 0)[h] *= 0.5
    dst = np.concatenate([np.arange(h + 1), np.arange(m - h + 1, m)])
    out = np.zeros(c.shape[:-d] + (m,) * (d - 1) + (m // 2 + 1,), dtype=complex)
    out[(Ellipsis,) + np.ix_(*([dst] * (d - 1))) + (slice(0, h + 1),)] = c
    for ax in range(-d, -1):
        view = np.moveaxis(out, ax, 0)
        view[m - h] = view[h]
    return out


def _truncate_half(b: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Half-spectrum on the padded grid -> full coefficients on the n-grid."""
    n, m, h = grid.n, grid.padded_n, grid.n // 2
    other = _axes(grid.dim)[:-1]
    # the -n/2 column of the padded grid is implicit in the half layout
    nyq_neg = np.conj(_negate_index(b[..., h], tuple(a + 1 for a in other)) if other else np.conj(b[..., h]))
    half = np.empty(b.shape[:-1] + (h + 1,), dtype=complex)
    half[..., :h] = b[..., :h]
    half[..., h] = b[..., h] + nyq_neg
    for ax in other:
        half = _truncate_axis(half, ax, n, m)
    full = np.empty(half.shape[:-1] + (n,), dtype=complex)
    full[..., : h + 1] = half
    mirrored = np.conj(_negate_index(half[..., 1:h], tuple(other)))
    full[..., h + 1:] = mirrored[..., ::-1]
    return full


def to_padded_physical(c: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Coefficients (any leading batch axes) -> physical values on the padded grid."""
    m = grid.padded_n
    return sfft.irfftn(_pad_half(c, grid) * m**grid.dim, s=(m,) * grid.dim, axes=_axes(grid.dim))


def from_padded_physical(f: np.ndarray, grid: GridSpec) -> np.ndarray:
    m = grid.padded_n
    b = sfft.rfftn(f, axes=_axes(grid.dim)) / m**grid.dim
    return _truncate_half(b, grid)


def dealias_product(a: SpectralField, b: SpectralField) -> SpectralField:
    """Pointwise product evaluated on the padded grid and truncated back."""
    _check_same_grid(a, b)
    grid = a.grid
    pa = to_padded_physical(a.coeffs, grid)
    pb = to_padded_physical(b.coeffs, grid)
    return SpectralField(grid, from_padded_physical(pa * pb, grid))
