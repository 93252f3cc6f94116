"""Initial-data families.

All families produce L2 data on the box, so taking them as eps-independent
satisfies the data hypotheses trivially: u0 and th0 do not move with eps and
sqrt(eps) p0 -> 0 for any fixed p0.

taylor_green             Taylor-Green velocity, periodic Gaussian-like blob for th, p0 = 0
taylor_green_compatible  same, p0 = limit pressure of u0
random                   random divergence-free u and random th, p0 = 0
incompatible             random plus an O(1) random mean-zero p0 (initial layer)
heat_decay               u = (sin x2, 0, ...), th = 0, p0 = 0 (nonlinearity vanishes)
"""
from __future__ import annotations

import numpy as np

from .leray import q_coeffs
from .spectral import GridSpec, SpectralField, VectorField, forward

FAMILIES = ("taylor_green", "taylor_green_compatible", "random", "incompatible", "heat_decay")

BLOB_CONCENTRATION = 2.0


def _scaled_coords(grid: GridSpec) -> np.ndarray:
    return grid.coords * (2 * np.pi / grid.length)


def taylor_green_velocity(grid: GridSpec) -> VectorField:
    x = _scaled_coords(grid)
    if grid.dim == 2:
        u = np.array([np.sin(x[0]) * np.cos(x[1]), -np.cos(x[0]) * np.sin(x[1])])
    else:
        cz = np.cos(x[2])
        u = np.array([np.sin(x[0]) * np.cos(x[1]) * cz, -np.cos(x[0]) * np.sin(x[1]) * cz, np.zeros(grid.shape)])
    return VectorField(grid, forward(u, grid.dim))


def periodic_blob(grid: GridSpec, concentration: float = BLOB_CONCENTRATION) -> SpectralField:
    """exp(c * sum_i (cos(x_i - pi) - 1)): a smooth periodic bump centred in the box."""
    x = _scaled_coords(grid)
    f = np.exp(concentration * np.sum(np.cos(x - np.pi) - 1.0, axis=0))
    return SpectralField(grid, forward(f, grid.dim))


def shear_velocity(grid: GridSpec) -> VectorField:
    x = _scaled_coords(grid)
    u = np.zeros((grid.dim,) + grid.shape)
    u[0] = np.sin(x[1])
    return VectorField(grid, forward(u, grid.dim))


def _band_filter(grid: GridSpec, k0: float) -> np.ndarray:
    """Smooth spectral envelope peaking near k0, cut off above n/3."""
    kmag = grid.kmag * (grid.length / (2 * np.pi))
    amp = (kmag / k0) ** 2 * np.exp(-((kmag / k0) ** 2))
    amp[kmag > grid.n / 3] = 0.0
    amp[grid.nyquist_mask] = 0.0
    return amp


def _normalize_rms(c: np.ndarray, grid: GridSpec) -> np.ndarray:
    rms = np.sqrt(np.sum(np.abs(c) ** 2))
    return c / rms if rms > 0 else c


def random_scalar(grid: GridSpec, rng: np.random.Generator, k0: float = 3.0) -> np.ndarray:
    c = forward(rng.standard_normal(grid.shape), grid.dim) * _band_filter(grid, k0)
    c.flat[0] = 0.0
    return _normalize_rms(c, grid)


def random_solenoidal(grid: GridSpec, rng: np.random.Generator, k0: float = 3.0) -> np.ndarray:
    c = forward(rng.standard_normal((grid.dim,) + grid.shape), grid.dim) * _band_filter(grid, k0)
    c = c - q_coeffs(c, grid)
    c[(Ellipsis,) + (0,) * grid.dim] = 0.0
    return _normalize_rms(c, grid)


def make_initial_data(grid: GridSpec, family: str, seed: int = 0):
    """Return (u0, th0, p0) for a named family; deterministic in ``seed``."""
    zero = grid.zeros()
    if family == "heat_decay":
        return shear_velocity(grid), zero, grid.zeros()
    if family in ("taylor_green", "taylor_green_compatible"):
        u = taylor_green_velocity(grid)
        theta = periodic_blob(grid)
        p = zero
        if family == "taylor_green_compatible":
            from .reference import recover_pressure

            p = recover_pressure(u)
        return u, theta, p
    if family in ("random", "incompatible"):
        rng = np.random.default_rng(seed)
        u = VectorField(grid, random_solenoidal(grid, rng))
        theta = SpectralField(grid, random_scalar(grid, rng))
        p = SpectralField(grid, random_scalar(grid, rng)) if family == "incompatible" else zero
        return u, theta, p
    raise ValueError(f"unknown initial-data family {family!r}; expected one of {FAMILIES}")
