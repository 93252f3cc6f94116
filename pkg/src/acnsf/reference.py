"""Incompressible Navier-Stokes-Fourier reference solver and weak-form checks.

The limit system is advanced with the same Strang layout as the artificial
compressibility solver: exact diffusion factors for half steps and an
explicit midpoint step on the Leray-projected nonlinearity.  The pressure
convention follows the relaxed system, grad p on the left of the momentum
equation, so the recovered pressure satisfies grad p = -Q[(u.grad)u].
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .ac_solver import (
    CFLViolation,
    NumericalFailure,
    Trajectory,
    _energy_arrays,
    _midpoint,
    _nonlinear_arrays,
    advective_dt_limit,
    resolve_steps,
)
from .leray import q_coeffs
from .spectral import (
    GridSpec,
    SpectralField,
    VectorField,
    forward,
    from_padded_physical,
    inverse,
    to_padded_physical,
)

__all__ = [
    "RefState",
    "RefRecord",
    "ref_step",
    "ref_run",
    "recover_pressure",
    "pressure_from_trace",
    "TestField",
    "make_test_fields",
    "weak_residual",
    "WeakResidual",
]


@dataclass(frozen=True, eq=False)
class RefState:
    u: VectorField
    theta: SpectralField
    mu: float = 1.0
    kappa: float = 1.0
    t: float = 0.0

    @property
    def grid(self) -> GridSpec:
        return self.u.grid


@dataclass(frozen=True)
class RefRecord:
    t: float
    kinetic_thermal: float
    D: float
    div_u_L2: float
    theta_max: float


def _projected_rhs(u, theta, grid):
    du, dth = _nonlinear_arrays(u, theta, grid)
    return du - q_coeffs(du, grid), dth


class _RefStepper:
    def __init__(self, grid: GridSpec, mu: float, kappa: float, dt: float):
        self.grid, self.dt = grid, dt
        self.heat_u = np.exp(-mu * grid.k2 * dt / 2)
        self.heat_th = np.exp(-kappa * grid.k2 * dt / 2)

    def __call__(self, u, theta, check_cfl: bool = True):
        grid, vol = self.grid, self.grid.volume
        if check_cfl:
            limit = advective_dt_limit(u, grid)
            if self.dt > limit * (1 + 1e-12):
                raise CFLViolation(self.dt, limit)
        e0 = _energy_arrays(u, theta, 0.0, 0.0, vol)
        u, theta = self.heat_u * u, self.heat_th * theta
        e1 = _energy_arrays(u, theta, 0.0, 0.0, vol)
        u, theta = _midpoint(u, theta, self.dt, grid, rhs=_projected_rhs)
        # keep the discrete divergence at round-off
        u = u - q_coeffs(u, grid)
        e2 = _energy_arrays(u, theta, 0.0, 0.0, vol)
        u, theta = self.heat_u * u, self.heat_th * theta
        e3 = _energy_arrays(u, theta, 0.0, 0.0, vol)
        return u, theta, (e0 - e1) + (e2 - e3)


def ref_step(state: RefState, dt: float) -> RefState:
    stepper = _RefStepper(state.grid, state.mu, state.kappa, dt)
    u, theta, _ = stepper(state.u.coeffs, state.theta.coeffs)
    g = state.grid
    return replace(state, u=VectorField(g, u), theta=SpectralField(g, theta), t=state.t + dt)


def ref_run(u0: VectorField, theta0: SpectralField, T: float, dt: float, save_stride: float | None = None,
            mu: float = 1.0, kappa: float = 1.0, keep_states: bool = True, observer=None):
    """Integrate the limit system; return (Trajectory, list of RefRecord).

    ``u0`` is projected onto divergence-free fields first.
    """
    grid = u0.grid
    dt, n_steps, per_save = resolve_steps(T, dt, save_stride)
    stepper = _RefStepper(grid, mu, kappa, dt)
    u = u0.coeffs - q_coeffs(u0.coeffs, grid)
    theta = theta0.coeffs.copy()
    D = 0.0
    traj = Trajectory()
    records = []
    vol = grid.volume

    def save(t):
        s = RefState(VectorField(grid, u), SpectralField(grid, theta), mu, kappa, t)
        div = 1j * np.sum(grid.k_deriv * u, axis=0)
        rec = RefRecord(
            t=t,
            kinetic_thermal=_energy_arrays(u, theta, 0.0, 0.0, vol),
            D=D,
            div_u_L2=math.sqrt(vol * float(np.sum(np.abs(div) ** 2))),
            theta_max=float(np.max(np.abs(inverse(theta, grid.dim)))),
        )
        if not math.isfinite(rec.kinetic_thermal):
            raise NumericalFailure(t, "reference.ref_run")
        records.append(rec)
        if keep_states:
            traj.append(s)
        if observer is not None:
            observer(s, rec)

    save(0.0)
    for i in range(1, n_steps + 1):
        u, theta, dissipated = stepper(u, theta)
        D += dissipated
        if i % per_save == 0:
            save(i * dt)
    return traj, records


# -- pressure -------------------------------------------------------------------------

def _advection(u: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Dealiased (u.grad)u from raw coefficients."""
    d = grid.dim
    grads = 1j * grid.k_deriv[None, :] * u[:, None]
    phys = to_padded_physical(np.concatenate([u, grads.reshape((d * d,) + grid.shape)]), grid)
    U = phys[:d]
    G = phys[d:].reshape((d, d) + phys.shape[1:])
    return from_padded_physical(np.einsum("j...,ij...->i...", U, G), grid)


def _inv_k2(grid: GridSpec) -> np.ndarray:
    k2 = grid.k2
    return np.where(k2 > 0, 1.0 / np.where(k2 > 0, k2, 1.0), 0.0)


def recover_pressure(u: VectorField) -> SpectralField:
    """Mean-zero p with grad p = -Q[(u.grad)u], i.e. p = -lap^{-1} div((u.grad)u)."""
    grid = u.grid
    adv = _advection(u.coeffs, grid)
    div = np.sum(1j * grid.k_deriv * adv, axis=0)
    return SpectralField(grid, _inv_k2(grid) * div)


def pressure_from_trace(u: VectorField) -> SpectralField:
    """-lap^{-1} tr((Du)^2); equals recover_pressure for divergence-free u."""
    grid = u.grid
    d = grid.dim
    grads = 1j * grid.k_deriv[None, :] * u.coeffs[:, None]
    G = to_padded_physical(grads.reshape((d * d,) + grid.shape), grid).reshape((d, d) + (grid.padded_n,) * d)
    tr = np.einsum("ij...,ji...->...", G, G)
    return SpectralField(grid, _inv_k2(grid) * from_padded_physical(tr, grid))


# -- weak formulation -------------------------------------------------------------------

def _bump(z):
    z = np.asarray(z, dtype=float)
    out = np.zeros_like(z)
    inside = np.abs(z) < 1
    out[inside] = np.exp(-1.0 / (1.0 - z[inside] ** 2))
    return out


def _bump_prime(z):
    z = np.asarray(z, dtype=float)
    out = np.zeros_like(z)
    inside = np.abs(z) < 1
    zi = z[inside]
    out[inside] = np.exp(-1.0 / (1.0 - zi**2)) * (-2 * zi / (1.0 - zi**2) ** 2)
    return out


@dataclass(frozen=True, eq=False)
class TestField:
    """Separable test function psi(t) * Phi(x) (velocity) and psi(t) * phi(x) (temperature).

    psi is a smooth bump centred at ``center`` with half-width ``width``.
    """

    Phi: VectorField
    phi: SpectralField
    center: float
    width: float

    __test__ = False  # not a pytest class

    def psi(self, t):
        return _bump((np.asarray(t) - self.center) / self.width)

    def dpsi(self, t):
        return _bump_prime((np.asarray(t) - self.center) / self.width) / self.width


def make_test_fields(grid: GridSpec, T: float, count: int, seed: int = 0, kmax: float = 4.0) -> list[TestField]:
    """Random band-limited divergence-free Phi and scalar phi, bumps supported inside (0, T)."""
    rng = np.random.default_rng(seed)
    kmag = grid.kmag * grid.length / (2 * np.pi)
    band = (kmag <= kmax) & (kmag > 0)
    fields = []
    for _ in range(count):
        v = forward(rng.standard_normal((grid.dim,) + grid.shape), grid.dim) * band
        v = v - q_coeffs(v, grid)
        s = forward(rng.standard_normal(grid.shape), grid.dim) * band
        lo, hi = sorted(rng.uniform(0.1 * T, 0.9 * T, size=2))
        center = 0.5 * (lo + hi)
        width = max(0.5 * (hi - lo), 0.1 * T)
        width = min(width, center, T - center)
        fields.append(TestField(VectorField(grid, v), SpectralField(grid, s), center, width))
    return fields


@dataclass(frozen=True)
class WeakResidual:
    velocity_abs: float
    velocity_norm: float
    theta_abs: float
    theta_norm: float

    @property
    def normalized(self) -> float:
        return max(self.velocity_norm, self.theta_norm)


def _products(u: np.ndarray, theta: np.ndarray, grid: GridSpec):
    """Dealiased u_i u_j (d, d, ...) and th u_i (d, ...)."""
    d = grid.dim
    phys = to_padded_physical(np.concatenate([u, theta[None]]), grid)
    U, TH = phys[:d], phys[d]
    uu = from_padded_physical((U[:, None] * U[None, :]).reshape((d * d,) + U.shape[1:]), grid)
    tu = from_padded_physical(TH * U, grid)
    return uu.reshape((d, d) + grid.shape), tu


def weak_residual(traj: Trajectory, tests: list[TestField], tol_div: float = 1e-10) -> list[WeakResidual]:
    """Space-time residuals of both weak forms for each test field.

    The time integral uses the trapezoid rule over the trajectory samples.
    Each residual is normalized by the sum of absolute values of its terms.
    """
    grid = traj.grid
    vol = grid.volume
    for tf in tests:
        div = np.sum(1j * grid.k_deriv * tf.Phi.coeffs, axis=0)
        scale = np.sqrt(np.sum(np.abs(tf.Phi.coeffs) ** 2))
        if np.sqrt(np.sum(np.abs(div) ** 2)) > tol_div * max(scale, 1e-300) * max(1.0, float(np.max(grid.kmag))):
            raise ValueError("velocity test field is not divergence-free")
    times = np.asarray(traj.times)
    ik = 1j * grid.k_deriv
    k2 = grid.k2
    mu, kappa = traj.states[0].mu, traj.states[0].kappa

    n_t, n_f = len(times), len(tests)
    diff_u = np.zeros((n_f, n_t))
    conv_u = np.zeros((n_f, n_t))
    mass_u = np.zeros((n_f, n_t))
    diff_t = np.zeros((n_f, n_t))
    conv_t = np.zeros((n_f, n_t))
    mass_t = np.zeros((n_f, n_t))
    grad_Phi = [ik[None, :] * tf.Phi.coeffs[:, None] for tf in tests]  # [i, j] = d_j Phi_i
    grad_phi = [ik * tf.phi.coeffs[None] for tf in tests]

    def ip(a, b):
        return vol * float(np.sum((np.conj(a) * b).real))

    for it, s in enumerate(traj.states):
        u, th = s.u.coeffs, s.theta.coeffs
        uu, tu = _products(u, th, grid)
        for f, tf in enumerate(tests):
            diff_u[f, it] = mu * ip(tf.Phi.coeffs, k2 * u)
            # u_i u_j d_i Phi_j
            conv_u[f, it] = ip(np.transpose(grad_Phi[f], (1, 0) + tuple(range(2, 2 + grid.dim))), uu)
            mass_u[f, it] = ip(tf.Phi.coeffs, u)
            diff_t[f, it] = kappa * ip(tf.phi.coeffs, k2 * th)
            conv_t[f, it] = ip(grad_phi[f], tu)
            mass_t[f, it] = ip(tf.phi.coeffs, th)

    out = []
    u0, th0 = traj.states[0].u.coeffs, traj.states[0].theta.coeffs
    for f, tf in enumerate(tests):
        psi, dpsi = tf.psi(times), tf.dpsi(times)
        psi0 = float(tf.psi(0.0))
        terms_u = [
            np.trapezoid(psi * diff_u[f], times),
            -np.trapezoid(psi * conv_u[f], times),
            -np.trapezoid(dpsi * mass_u[f], times),
            -psi0 * ip(tf.Phi.coeffs, u0),
        ]
        terms_t = [
            np.trapezoid(psi * diff_t[f], times),
            -np.trapezoid(psi * conv_t[f], times),
            -np.trapezoid(dpsi * mass_t[f], times),
            -psi0 * ip(tf.phi.coeffs, th0),
        ]
        ru, rt = abs(sum(terms_u)), abs(sum(terms_t))
        su = sum(abs(x) for x in terms_u) or 1.0
        st = sum(abs(x) for x in terms_t) or 1.0
        out.append(WeakResidual(ru, ru / su, rt, rt / st))
    return out
