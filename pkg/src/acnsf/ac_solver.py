"""Artificial compressibility solver for the Navier-Stokes-Fourier system.

The system advanced here is

    du/dt + grad p = mu lap u - (u.grad)u - (div u) u / 2
    dth/dt + u.grad th = kappa lap th - (div u) th / 2
    eps dp/dt + div u = 0

on a periodic box.  Diffusion and the pressure/divergence coupling are linear
and integrated exactly per Fourier mode; the quadratic terms are advanced by
an explicit midpoint step inside a Strang composition.  Because the acoustic
part is exact, the admissible time step is set by advection alone.

The dissipation integral D(t) is accumulated as the energy removed by the
linear substeps.  Along the exact linear flow the pressure coupling is
energy-neutral, so that drop equals the time integral of
mu |grad u|^2 + kappa |grad th|^2 over the substep; whatever is left in
E(t) + D(t) - E(0) is the error of the nonlinear substeps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .leray import q_coeffs
from .norms import lebesgue_norm
from .spectral import GridSpec, SpectralField, VectorField, inverse, from_padded_physical, to_padded_physical

__all__ = [
    "ACState",
    "DiagnosticsRecord",
    "RunConfig",
    "Trajectory",
    "NumericalFailure",
    "CFLViolation",
    "linear_mode_propagator",
    "LinearPropagator",
    "nonlinear_rhs",
    "step",
    "energy",
    "diagnostics",
    "run",
    "advective_dt_limit",
    "DIAGNOSTIC_COLUMNS",
]

CFL_MAX = 1.0


class NumericalFailure(FloatingPointError):
    """Non-finite values appeared during time integration."""

    def __init__(self, t: float, where: str = "ac_solver.run"):
        super().__init__(f"{where}: non-finite state at t={t:.17g}")
        self.t = t


class CFLViolation(ValueError):
    def __init__(self, dt: float, dt_max: float):
        super().__init__(f"time step dt={dt:.6g} violates the advective CFL limit; admissible dt <= {dt_max:.6g}")
        self.dt = dt
        self.dt_max = dt_max


@dataclass(frozen=True, eq=False)
class ACState:
    u: VectorField
    theta: SpectralField
    p: SpectralField
    eps: float
    mu: float = 1.0
    kappa: float = 1.0
    t: float = 0.0

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError(f"eps must be > 0, got {self.eps}")
        if self.u.grid != self.theta.grid or self.u.grid != self.p.grid:
            raise ValueError("state fields live on different grids")

    @property
    def grid(self) -> GridSpec:
        return self.u.grid

    @classmethod
    def zeros(cls, grid: GridSpec, eps: float, mu: float = 1.0, kappa: float = 1.0) -> "ACState":
        return cls(grid.vector_zeros(), grid.zeros(), grid.zeros(), eps, mu, kappa, 0.0)


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    E: float
    D: float
    balance_residual: float
    div_u_L2: float
    Qu_L2: float
    Qu_L4: float
    sqrt_eps_p_L2: float
    u_L2: float
    theta_L2: float

    def row(self) -> tuple[float, ...]:
        return tuple(getattr(self, c) for c in DIAGNOSTIC_COLUMNS)


DIAGNOSTIC_COLUMNS = (
    "t", "E", "D", "balance_residual", "div_u_L2", "Qu_L2", "Qu_L4", "sqrt_eps_p_L2", "u_L2", "theta_L2",
)


@dataclass(frozen=True)
class RunConfig:
    """One artificial compressibility run.

    Either ``dt`` or ``cfl`` fixes the step; with ``cfl`` the step is
    ``cfl * dx / max_x sum_i |u_i|`` evaluated on the initial velocity, then
    shrunk so that it divides ``save_stride``.
    """

    grid: GridSpec
    eps: float
    T: float
    mu: float = 1.0
    kappa: float = 1.0
    dt: float | None = None
    cfl: float | None = None
    family: str = "taylor_green"
    seed: int = 0
    save_stride: float | None = None

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError(f"eps must be > 0, got {self.eps}")
        if not self.T > 0:
            raise ValueError(f"T must be > 0, got {self.T}")
        if self.dt is None and self.cfl is None:
            raise ValueError("one of dt or cfl must be given")
        if self.dt is not None and not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.mu < 0 or self.kappa < 0:
            raise ValueError("mu and kappa must be non-negative")

    @property
    def degenerate(self) -> bool:
        """eps >= 1 is outside the relaxation regime; allowed for debugging."""
        return self.eps >= 1


@dataclass
class Trajectory:
    """Time-sampled states of a run (ACState or RefState instances)."""

    times: list[float] = field(default_factory=list)
    states: list = field(default_factory=list)

    def append(self, state) -> None:
        self.times.append(state.t)
        self.states.append(state)

    def __len__(self) -> int:
        return len(self.states)

    @property
    def grid(self) -> GridSpec:
        return self.states[0].u.grid


# -- linear part ------------------------------------------------------------------

def _sinhc_pair(tau: np.ndarray, omega2: np.ndarray, t: float):
    """exp(tau t/2) cosh(w t) and exp(tau t/2) sinh(w t)/w with w = sqrt(omega2), elementwise."""
    w = np.sqrt(omega2.astype(complex))
    wt = w * t
    half = tau * t / 2
    ep = np.exp(half + wt)
    em = np.exp(half - wt)
    c = 0.5 * (ep + em)
    small = np.abs(wt) < 1e-3
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(small, 0.0, (ep - em) / (2 * np.where(small, 1.0, w)))
    z2 = wt[small] ** 2
    s[small] = np.exp(half[small]) * t * (1 + z2 / 6 + z2**2 / 120)
    return c.real, s.real


def linear_mode_propagator(k2, kd2, eps: float, mu: float, dt: float):
    """Exact per-mode propagator of the diffusive-acoustic linear part.

    ``k2`` is |k|^2 (diffusion) and ``kd2`` the squared derivative
    wavevector (pressure coupling); both broadcast.  Returns
    ``(transverse, M)`` where ``transverse = exp(-mu |k|^2 dt)`` and ``M``
    has shape ``(..., 2, 2)``: the exponential of
    [[-mu |k|^2, |k|^2], [-1/eps, 0]] acting on (s, p) with s = i k.u.
    """
    k2 = np.asarray(k2, dtype=float)
    kd2 = np.asarray(kd2, dtype=float)
    a = -mu * k2
    b = kd2
    c = -1.0 / eps
    omega2 = a**2 / 4 - b / eps
    ec, es = _sinhc_pair(a, omega2, dt)
    m = np.empty(np.broadcast(k2, kd2).shape + (2, 2))
    m[..., 0, 0] = ec + es * a / 2
    m[..., 0, 1] = es * b
    m[..., 1, 0] = np.where(b > 0, es * c, 0.0)
    m[..., 1, 1] = ec - es * a / 2
    return np.exp(a * dt), m


class LinearPropagator:
    """Cached linear half-step for a fixed grid, parameters and step size."""

    def __init__(self, grid: GridSpec, eps: float, mu: float, kappa: float, h: float):
        self.grid = grid
        self.h = h
        self.transverse, m = linear_mode_propagator(grid.k2, grid.kd2, eps, mu, h)
        self.m11, self.m12, self.m21, self.m22 = (m[..., i, j] for i in (0, 1) for j in (0, 1))
        self.heat = np.exp(-kappa * grid.k2 * h)
        kd2 = grid.kd2
        with np.errstate(divide="ignore", invalid="ignore"):
            self.k_over_k2 = np.where(kd2 > 0, grid.k_deriv / np.where(kd2 > 0, kd2, 1.0), 0.0)

    def __call__(self, u: np.ndarray, theta: np.ndarray, p: np.ndarray):
        kd = self.grid.k_deriv
        s = 1j * np.sum(kd * u, axis=0)
        u_long = -1j * self.k_over_k2 * s
        u_trans = u - u_long
        s_new = self.m11 * s + self.m12 * p
        p_new = self.m21 * s + self.m22 * p
        u_new = self.transverse * u_trans - 1j * self.k_over_k2 * s_new
        return u_new, self.heat * theta, p_new


# -- nonlinear part ---------------------------------------------------------------

def _nonlinear_arrays(u: np.ndarray, theta: np.ndarray, grid: GridSpec):
    """Dealiased -(u.grad)u - (div u)u/2 and -u.grad th - (div u) th/2 from raw coefficients."""
    d = grid.dim
    ikd = 1j * grid.k_deriv
    grads = ikd[None, :] * u[:, None]  # grads[i, j] = d_j u_i
    batch = np.concatenate([u, grads.reshape((d * d,) + grid.shape), theta[None], ikd * theta[None]])
    phys = to_padded_physical(batch, grid)
    U = phys[:d]
    G = phys[d:d + d * d].reshape((d, d) + phys.shape[1:])
    TH = phys[d + d * d]
    GT = phys[d + d * d + 1:]
    div = np.trace(G, axis1=0, axis2=1)
    adv = np.einsum("j...,ij...->i...", U, G)
    out = np.empty((d + 1,) + phys.shape[1:])
    out[:d] = -adv - 0.5 * div * U
    out[d] = -np.sum(U * GT, axis=0) - 0.5 * div * TH
    spec = from_padded_physical(out, grid)
    # Nyquist modes have no odd derivative; keeping them would break the skew-symmetry of the terms
    spec[:, grid.nyquist_mask] = 0
    return spec[:d], spec[d]


def nonlinear_rhs(state: ACState) -> tuple[VectorField, SpectralField]:
    """Tendencies of the quadratic terms only (no pressure, no diffusion)."""
    du, dth = _nonlinear_arrays(state.u.coeffs, state.theta.coeffs, state.grid)
    return VectorField(state.grid, du), SpectralField(state.grid, dth)


def _midpoint(u, theta, dt, grid, rhs=_nonlinear_arrays):
    du, dth = rhs(u, theta, grid)
    um, thm = u + 0.5 * dt * du, theta + 0.5 * dt * dth
    du, dth = rhs(um, thm, grid)
    return u + dt * du, theta + dt * dth


# -- energy and diagnostics -------------------------------------------------------

def _energy_arrays(u, theta, p, eps, volume) -> float:
    return 0.5 * volume * float(np.sum(np.abs(u) ** 2) + np.sum(np.abs(theta) ** 2) + eps * np.sum(np.abs(p) ** 2))


def energy(state: ACState) -> float:
    """int |u|^2/2 + |th|^2/2 + eps |p|^2/2 over the box."""
    return _energy_arrays(state.u.coeffs, state.theta.coeffs, state.p.coeffs, state.eps, state.grid.volume)


def advective_dt_limit(u: np.ndarray, grid: GridSpec, cfl: float = CFL_MAX) -> float:
    speed = np.sum(np.abs(inverse(u, grid.dim)), axis=0).max()
    if speed == 0:
        return math.inf
    return cfl * grid.spacing / speed


def _check_cfl(u, grid, dt):
    limit = advective_dt_limit(u, grid)
    if dt > limit * (1 + 1e-12):
        raise CFLViolation(dt, limit)


def diagnostics(state: ACState, D: float, E0: float) -> DiagnosticsRecord:
    grid = state.grid
    vol = grid.volume
    u = state.u.coeffs
    E = energy(state)
    div = 1j * np.sum(grid.k_deriv * u, axis=0)
    qu = q_coeffs(u, grid)
    l2 = lambda c: math.sqrt(vol * float(np.sum(np.abs(c) ** 2)))  # noqa: E731
    return DiagnosticsRecord(
        t=state.t,
        E=E,
        D=D,
        balance_residual=abs(E + D - E0),
        div_u_L2=l2(div),
        Qu_L2=l2(qu),
        Qu_L4=lebesgue_norm(inverse(qu, grid.dim), grid, 4),
        sqrt_eps_p_L2=math.sqrt(state.eps) * l2(state.p.coeffs),
        u_L2=l2(u),
        theta_L2=l2(state.theta.coeffs),
    )


# -- time stepping -----------------------------------------------------------------

class _Stepper:
    """Strang step on raw arrays, tracking the dissipated energy."""

    def __init__(self, grid: GridSpec, eps: float, mu: float, kappa: float, dt: float):
        self.grid, self.eps, self.dt = grid, eps, dt
        self.half = LinearPropagator(grid, eps, mu, kappa, dt / 2)

    def __call__(self, u, theta, p, check_cfl: bool = True):
        grid, eps, vol = self.grid, self.eps, self.grid.volume
        if check_cfl:
            _check_cfl(u, grid, self.dt)
        e0 = _energy_arrays(u, theta, p, eps, vol)
        u, theta, p = self.half(u, theta, p)
        e1 = _energy_arrays(u, theta, p, eps, vol)
        u, theta = _midpoint(u, theta, self.dt, grid)
        e2 = _energy_arrays(u, theta, p, eps, vol)
        u, theta, p = self.half(u, theta, p)
        e3 = _energy_arrays(u, theta, p, eps, vol)
        return u, theta, p, (e0 - e1) + (e2 - e3)


def step(state: ACState, dt: float) -> ACState:
    """One Strang step: half linear, explicit-midpoint nonlinear, half linear."""
    stepper = _Stepper(state.grid, state.eps, state.mu, state.kappa, dt)
    u, theta, p, _ = stepper(state.u.coeffs, state.theta.coeffs, state.p.coeffs)
    g = state.grid
    return replace(state, u=VectorField(g, u), theta=SpectralField(g, theta), p=SpectralField(g, p), t=state.t + dt)


def resolve_steps(T: float, dt: float, save_stride: float | None) -> tuple[float, int, int]:
    """Adjust dt so that it divides both the save stride and T; return (dt, n_steps, steps_per_save)."""
    stride = save_stride if save_stride is not None else T
    per_save = max(1, math.ceil(stride / dt - 1e-9))
    dt = stride / per_save
    n_steps = round(T / dt)
    if abs(n_steps * dt - T) > 1e-9 * T:
        raise ValueError(f"T={T} is not a multiple of the save stride {stride}")
    return dt, n_steps, per_save


def initial_state(config: RunConfig) -> ACState:
    from .initial_data import make_initial_data

    u, theta, p = make_initial_data(config.grid, config.family, config.seed)
    return ACState(u, theta, p, config.eps, config.mu, config.kappa, 0.0)


def choose_dt(config: RunConfig, u0: VectorField) -> float:
    if config.dt is not None:
        return config.dt
    limit = advective_dt_limit(u0.coeffs, config.grid, config.cfl)
    if math.isinf(limit):
        return config.save_stride or config.T
    return limit


def run(config: RunConfig, state: ACState | None = None, keep_states: bool = True, observer=None):
    """Integrate to ``config.T``; return (Trajectory, list of DiagnosticsRecord).

    ``state`` overrides the initial-data family (used for restarts, in which
    case ``config.T`` is the absolute final time).  ``observer(state, record)``
    is called at every save point; it is the hook used by sweeps to compute
    norms without keeping the whole trajectory in memory.
    """
    if state is None:
        state = initial_state(config)
    grid = state.grid
    dt = choose_dt(config, state.u)
    span = config.T - state.t
    dt, n_steps, per_save = resolve_steps(span, dt, config.save_stride)
    stepper = _Stepper(grid, state.eps, state.mu, state.kappa, dt)

    u, theta, p = state.u.coeffs.copy(), state.theta.coeffs.copy(), state.p.coeffs.copy()
    t0 = state.t
    E0 = _energy_arrays(u, theta, p, state.eps, grid.volume)
    D = 0.0
    traj = Trajectory()
    records = []

    def save(t):
        s = replace(state, u=VectorField(grid, u), theta=SpectralField(grid, theta), p=SpectralField(grid, p), t=t)
        rec = diagnostics(s, D, E0)
        if not all(math.isfinite(x) for x in rec.row()):
            raise NumericalFailure(t)
        records.append(rec)
        if keep_states:
            traj.append(s)
        if observer is not None:
            observer(s, rec)

    save(t0)
    for i in range(1, n_steps + 1):
        u, theta, p, dissipated = stepper(u, theta, p)
        D += dissipated
        if not math.isfinite(D):
            raise NumericalFailure(t0 + i * dt)
        if i % per_save == 0:
            save(t0 + i * dt)
    return traj, records
