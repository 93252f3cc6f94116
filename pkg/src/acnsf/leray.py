"""Fourier-space Leray-Hodge projectors.

Per mode k != 0, Q acts as k (x) k / |k|^2 and P = I - Q.  The zero mode
(constant vectors) is divergence-free on the torus and belongs to P.  The
projector uses the same Nyquist-free wavevector as ``gradient`` and
``divergence`` so that ``div(P v) = 0`` holds exactly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import GridSpec, VectorField

__all__ = ["HodgePair", "project_Q", "project_P", "hodge_decompose"]


@dataclass(frozen=True, eq=False)
class HodgePair:
    solenoidal: VectorField
    gradient: VectorField


def _unit_k(grid: GridSpec) -> np.ndarray:
    kd = grid.k_deriv
    kd2 = grid.kd2
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(kd2 > 0, kd / np.sqrt(np.where(kd2 > 0, kd2, 1.0)), 0.0)


def q_coeffs(v: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Gradient part of raw vector coefficients of shape (dim, n, ..., n)."""
    khat = _unit_k(grid)
    return khat * np.sum(khat * v, axis=0)


def project_Q(v: VectorField) -> VectorField:
    return VectorField(v.grid, q_coeffs(v.coeffs, v.grid))


def project_P(v: VectorField) -> VectorField:
    return VectorField(v.grid, v.coeffs - q_coeffs(v.coeffs, v.grid))


def hodge_decompose(v: VectorField) -> HodgePair:
    q = q_coeffs(v.coeffs, v.grid)
    return HodgePair(VectorField(v.grid, v.coeffs - q), VectorField(v.grid, q))
