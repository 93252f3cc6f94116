"""Convergence experiments for the artificial compressibility limit.

An epsilon sweep runs the AC solver once per eps from shared initial data and
one incompressible reference run, and records space-time norms in streaming
fashion (no trajectory is kept in memory).  The remaining operations post-process
either a sweep report or stored trajectories:

    q_component_decay          log-log order of ||Qu||_{L2_t Lp_x} in eps
    time_modulus               L2_{t,x} shift modulus of theta or Pu
    pressure_wave_residual     residual of the rescaled pressure wave equation
    initial_layer_probe        acoustic frequency of a tracked pressure mode
    strichartz_scaling_report  eps-weighted pressure norms
    pressure_limit_check       time-averaged p against the limit pressure
"""
from __future__ import annotations

import json
import math
import re
import warnings
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy import signal, stats

from .ac_solver import ACState, RunConfig, Trajectory, choose_dt, initial_state, nonlinear_rhs, resolve_steps, run
from .leray import q_coeffs
from .norms import NormSpec, lebesgue_norm, spatial_norm, time_norm
from .reference import recover_pressure, ref_run
from .spectral import GridSpec, SpectralField, VectorField, inverse

__all__ = [
    "SweepConfig",
    "SweepReport",
    "EpsRecord",
    "Fit",
    "fit_order",
    "epsilon_sweep",
    "q_component_decay",
    "time_modulus",
    "pressure_wave_residual",
    "initial_layer_probe",
    "strichartz_scaling_report",
    "pressure_limit_check",
    "default_mollifier_scale",
    "paper_q_exponent",
    "DEFAULT_NORMS",
    "TORUS_CAVEAT",
]

DEFAULT_NORMS = (
    "Qu_L2t_L4x",
    "Qu_L2t_L2x",
    "Pu_err_L2tx",
    "theta_err_L2tx",
    "p_L4t_W-2,4x",
    "dtp_L4t_W-3,4x",
    "nonlinear_L1t_L3/2x",
    "div_u_L2tx",
)
_FIXED_NORMS = set(DEFAULT_NORMS)
_QU_NORM = re.compile(r"^Qu_L2t_L(\d+(?:\.\d+)?)x$")
_REFERENCE_NORMS = {"Pu_err_L2tx", "theta_err_L2tx"}

TORUS_CAVEAT = (
    "weighted pressure norms are measured on a periodic box; the uniform bound they "
    "mirror is a whole-space dispersive estimate and is not claimed to hold on the torus"
)


def paper_q_exponent(p: float) -> float:
    """Decay exponent (6 - p) / (36 p) of the gradient part in L2_t Lp_x."""
    return (6.0 - p) / (36.0 * p)


def default_mollifier_scale(eps: float) -> float:
    return eps ** (1.0 / 18.0)


# -- configuration and report types ----------------------------------------------------


def _validate_norm(name: str) -> None:
    if name not in _FIXED_NORMS and not _QU_NORM.match(name):
        raise ValueError(f"unknown norm {name!r}; known: {DEFAULT_NORMS} or Qu_L2t_L<p>x")


@dataclass(frozen=True)
class SweepConfig:
    eps_list: tuple[float, ...]
    template: RunConfig
    reference: bool = True
    norms: tuple[str, ...] = DEFAULT_NORMS
    compare_stride: float | None = None
    ref_dt: float | None = None
    tracked_mode: tuple[int, ...] | None = None
    workers: int = 1

    def __post_init__(self):
        eps = tuple(float(e) for e in self.eps_list)
        object.__setattr__(self, "eps_list", eps)
        object.__setattr__(self, "norms", tuple(self.norms))
        if not eps:
            raise ValueError("eps_list is empty")
        if any(not e > 0 for e in eps):
            raise ValueError(f"eps_list entries must be > 0, got {eps}")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError(f"eps_list must be strictly decreasing, got {eps}")
        for name in self.norms:
            _validate_norm(name)
        if not self.reference and _REFERENCE_NORMS & set(self.norms):
            raise ValueError("reference-error norms requested without a reference run")
        if self.tracked_mode is not None and len(self.tracked_mode) != self.template.grid.dim:
            raise ValueError(f"tracked_mode {self.tracked_mode} does not match dim={self.template.grid.dim}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")

    @property
    def save_stride(self) -> float:
        return self.template.save_stride if self.template.save_stride is not None else self.template.T

    @property
    def comparison_stride(self) -> float:
        return self.compare_stride if self.compare_stride is not None else self.save_stride


@dataclass(frozen=True)
class Fit:
    """Least-squares slope of log(value) against log(eps) with a 95% interval."""

    name: str
    order: float
    ci_low: float
    ci_high: float
    eps: tuple[float, ...]
    values: tuple[float, ...]


def fit_order(eps, values, name: str = "") -> Fit:
    eps = tuple(float(e) for e in eps)
    values = tuple(float(v) for v in values)
    if len(eps) < 2 or any(v <= 0 for v in values):
        return Fit(name, float("nan"), float("nan"), float("nan"), eps, values)
    res = stats.linregress(np.log(eps), np.log(values))
    if len(eps) > 2:
        half = stats.t.ppf(0.975, len(eps) - 2) * res.stderr
    else:
        half = float("nan")
    return Fit(name, float(res.slope), float(res.slope - half), float(res.slope + half), eps, values)


@dataclass(frozen=True)
class EpsRecord:
    eps: float
    dt: float
    norms: dict
    energy_residual: float
    sqrt_eps_p0_L2: float
    div_u0_Hm1: float
    times: tuple[float, ...]
    Qu_L2: tuple[float, ...]
    sqrt_eps_p_L2: tuple[float, ...]
    mode_re: tuple[float, ...] = ()
    mode_im: tuple[float, ...] = ()

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


@dataclass(frozen=True)
class SweepReport:
    config: SweepConfig
    records: tuple[EpsRecord, ...]
    fits: dict = field(default_factory=dict)

    @property
    def eps(self) -> tuple[float, ...]:
        return tuple(r.eps for r in self.records)

    def series(self, name: str) -> tuple[float, ...]:
        try:
            return tuple(r.norms[name] for r in self.records)
        except KeyError:
            raise KeyError(f"sweep did not record norm {name!r}") from None

    def to_ndjson(self) -> str:
        return "".join(r.to_json() + "\n" for r in self.records)

    def norms_csv(self) -> str:
        names = list(self.config.norms)
        lines = [",".join(["eps", "dt", "energy_residual"] + names)]
        for r in self.records:
            vals = [r.eps, r.dt, r.energy_residual] + [r.norms[n] for n in names]
            lines.append(",".join(f"{v:.17g}" for v in vals))
        return "\n".join(lines) + "\n"

    def fits_csv(self) -> str:
        lines = ["name,order,ci_low,ci_high"]
        for f in self.fits.values():
            lines.append(f"{f.name},{f.order:.17g},{f.ci_low:.17g},{f.ci_high:.17g}")
        return "\n".join(lines) + "\n"


# -- the sweep -------------------------------------------------------------------------


class _NormAccumulator:
    """Observer that turns the stream of saved states into space-time norms."""

    def __init__(self, norms, grid: GridSpec, stride: float, ref_samples, compare_stride, tracked_mode):
        self.norms = norms
        self.grid = grid
        self.stride = stride
        self.ref = ref_samples
        self.compare_stride = compare_stride
        self.qu_exponents = sorted({float(m.group(1)) for n in norms if (m := _QU_NORM.match(n))})
        self.want = set(norms)
        self.times = []
        self.series = {n: [] for n in norms}
        self.compare_times, self.pu_err, self.th_err = [], [], []
        self.window = deque(maxlen=3)
        self.dtp = []
        self.Qu_L2, self.sqrt_eps_p, self.mode = [], [], []
        self.tracked = None if tracked_mode is None else tuple(m % grid.n for m in tracked_mode)
        self.first = None

    def __call__(self, state: ACState, rec):
        g = self.grid
        self.times.append(state.t)
        self.Qu_L2.append(rec.Qu_L2)
        self.sqrt_eps_p.append(rec.sqrt_eps_p_L2)
        if self.tracked is not None:
            self.mode.append(complex(state.p.coeffs[self.tracked]))
        if self.first is None:
            self.first = state
        if self.qu_exponents:
            qu = inverse(q_coeffs(state.u.coeffs, g), g.dim)
            for r in self.qu_exponents:
                name = next(n for n in self.norms if (m := _QU_NORM.match(n)) and float(m.group(1)) == r)
                val = rec.Qu_L4 if r == 4 else rec.Qu_L2 if r == 2 else lebesgue_norm(qu, g, r)
                self.series[name].append(val)
        if "p_L4t_W-2,4x" in self.want:
            self.series["p_L4t_W-2,4x"].append(spatial_norm(state.p, NormSpec(r=4, s=-2)))
        if "div_u_L2tx" in self.want:
            self.series["div_u_L2tx"].append(rec.div_u_L2)
        if "nonlinear_L1t_L3/2x" in self.want:
            du, _ = nonlinear_rhs(state)
            self.series["nonlinear_L1t_L3/2x"].append(lebesgue_norm(du.physical(), g, 1.5))
        if "dtp_L4t_W-3,4x" in self.want:
            self._push_pressure(state.p.coeffs)
        if self.ref is not None:
            m = state.t / self.compare_stride
            idx = round(m)
            if abs(m - idx) < 1e-6 and idx in self.ref:
                ref_u, ref_th = self.ref[idx]
                pu = state.u.coeffs - q_coeffs(state.u.coeffs, g)
                self.compare_times.append(state.t)
                self.pu_err.append(math.sqrt(g.volume * float(np.sum(np.abs(pu - ref_u) ** 2))))
                self.th_err.append(math.sqrt(g.volume * float(np.sum(np.abs(state.theta.coeffs - ref_th) ** 2))))

    def _dtp_norm(self, c):
        return spatial_norm(SpectralField(self.grid, c), NormSpec(r=4, s=-3))

    def _push_pressure(self, p):
        self.window.append(p)
        h = self.stride
        if len(self.window) == 3:
            p0, p1, p2 = self.window
            if not self.dtp:
                self.dtp.append(self._dtp_norm((-3 * p0 + 4 * p1 - p2) / (2 * h)))
            self.dtp.append(self._dtp_norm((p2 - p0) / (2 * h)))

    def finish(self) -> dict:
        out = {}
        times = np.asarray(self.times)
        if "dtp_L4t_W-3,4x" in self.want:
            if len(self.window) == 3:
                p0, p1, p2 = self.window
                self.dtp.append(self._dtp_norm((3 * p2 - 4 * p1 + p0) / (2 * self.stride)))
                out["dtp_L4t_W-3,4x"] = time_norm(times, self.dtp, 4)
            else:
                out["dtp_L4t_W-3,4x"] = float("nan")
        for name in self.norms:
            if name in out or name in _REFERENCE_NORMS:
                continue
            vals = self.series[name]
            if name.startswith("Qu_L2t") or name == "div_u_L2tx":
                out[name] = time_norm(times, vals, 2) if len(vals) > 1 else float("nan")
            elif name == "p_L4t_W-2,4x":
                out[name] = time_norm(times, vals, 4) if len(vals) > 1 else float("nan")
            elif name == "nonlinear_L1t_L3/2x":
                out[name] = time_norm(times, vals, 1) if len(vals) > 1 else float("nan")
        if "Pu_err_L2tx" in self.want:
            out["Pu_err_L2tx"] = time_norm(self.compare_times, self.pu_err, 2)
        if "theta_err_L2tx" in self.want:
            out["theta_err_L2tx"] = time_norm(self.compare_times, self.th_err, 2)
        return {n: float(out[n]) for n in self.norms}


def _div_hm1(u: VectorField) -> float:
    g = u.grid
    div = 1j * np.sum(g.k_deriv * u.coeffs, axis=0)
    return spatial_norm(SpectralField(g, div), NormSpec(s=-1))


def _run_one(template: RunConfig, eps: float, norms, ref_samples, compare_stride, tracked_mode) -> EpsRecord:
    config = replace(template, eps=eps)
    state = initial_state(config)
    stride = config.save_stride if config.save_stride is not None else config.T
    acc = _NormAccumulator(norms, config.grid, stride, ref_samples, compare_stride, tracked_mode)
    try:
        _, records = run(config, state=state, keep_states=False, observer=acc)
    except Exception as exc:
        raise type(exc)(f"convergence_lab.epsilon_sweep: run at eps={eps:g} failed: {exc}") from exc
    return EpsRecord(
        eps=eps,
        dt=resolve_steps(config.T, choose_dt(config, state.u), config.save_stride)[0],
        norms=acc.finish(),
        energy_residual=max(abs(r.balance_residual) for r in records),
        sqrt_eps_p0_L2=math.sqrt(eps) * spatial_norm(state.p, NormSpec()),
        div_u0_Hm1=_div_hm1(state.u),
        times=tuple(acc.times),
        Qu_L2=tuple(acc.Qu_L2),
        sqrt_eps_p_L2=tuple(acc.sqrt_eps_p),
        mode_re=tuple(z.real for z in acc.mode),
        mode_im=tuple(z.imag for z in acc.mode),
    )


def _reference_samples(cfg: SweepConfig) -> dict:
    tpl = cfg.template
    state = initial_state(tpl)
    dt = cfg.ref_dt if cfg.ref_dt is not None else tpl.dt
    if dt is None:
        raise ValueError("reference run needs ref_dt or a template dt")
    traj, _ = ref_run(state.u, state.theta, tpl.T, dt, save_stride=cfg.comparison_stride,
                      mu=tpl.mu, kappa=tpl.kappa)
    return {i: (s.u.coeffs, s.theta.coeffs) for i, s in enumerate(traj.states)}


def epsilon_sweep(cfg: SweepConfig) -> SweepReport:
    """One AC run per eps (optionally in parallel) plus one reference run."""
    ratio = cfg.comparison_stride / cfg.save_stride
    if cfg.reference and abs(ratio - round(ratio)) > 1e-9:
        raise ValueError("compare_stride must be a multiple of the save stride")
    ref = _reference_samples(cfg) if cfg.reference else None
    args = [(cfg.template, e, cfg.norms, ref, cfg.comparison_stride, cfg.tracked_mode) for e in cfg.eps_list]
    if cfg.workers > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.workers, len(args))) as pool:
            records = tuple(pool.map(_run_one, *zip(*args)))
    else:
        records = tuple(_run_one(*a) for a in args)
    fits = {}
    for name in cfg.norms:
        fits[name] = fit_order([r.eps for r in records], [r.norms[name] for r in records], name)
    return SweepReport(cfg, records, fits)


def strictly_decreasing_in_eps(values) -> bool:
    """True when values shrink along the (decreasing) eps list."""
    return all(b < a for a, b in zip(values, values[1:]))


# -- post-processing -------------------------------------------------------------------


@dataclass(frozen=True)
class QDecay:
    p: float
    fit: Fit
    paper_exponent: float
    decreasing: bool

    @property
    def order(self) -> float:
        return self.fit.order


def q_component_decay(report: SweepReport, p: float = 4.0) -> QDecay:
    if not 4 <= p < 6:
        raise ValueError(f"convergence_lab.q_component_decay: p={p} outside [4, 6)")
    name = f"Qu_L2t_L{p:g}x"
    values = report.series(name)
    if len(values) < 3:
        raise ValueError(f"convergence_lab.q_component_decay: need >= 3 eps points, got {len(values)}")
    return QDecay(p, fit_order(report.eps, values, name), paper_q_exponent(p), strictly_decreasing_in_eps(values))


def _uniform_stride(times) -> float:
    times = np.asarray(times, dtype=float)
    if times.size < 2:
        raise ValueError("trajectory needs at least 2 samples")
    steps = np.diff(times)
    if not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
        raise ValueError("trajectory sampling must be uniform")
    return float(steps[0])


def _field_coeffs(state, name: str) -> np.ndarray:
    if name == "theta":
        return state.theta.coeffs
    if name == "Pu":
        return state.u.coeffs - q_coeffs(state.u.coeffs, state.grid)
    raise ValueError(f"field must be 'theta' or 'Pu', got {name!r}")


@dataclass(frozen=True)
class ModulusTable:
    field: str
    h: tuple[float, ...]
    moduli: tuple[float, ...]
    exponent: float
    ci_low: float
    ci_high: float


def time_modulus(traj: Trajectory, field: str, h_list) -> ModulusTable:
    """(int_0^{T-h} ||f(t+h) - f(t)||_{L2}^2 dt)^{1/2} for each shift h."""
    s = _uniform_stride(traj.times)
    grid = traj.grid
    coeffs = [_field_coeffs(st, field) for st in traj.states]
    times = np.asarray(traj.times)
    moduli = []
    for h in h_list:
        m = h / s
        if h < s * (1 - 1e-9) or abs(m - round(m)) > 1e-6:
            raise ValueError(f"convergence_lab.time_modulus: h={h:g} is not a multiple of the save stride {s:g}")
        m = round(m)
        if m >= len(coeffs):
            raise ValueError(f"convergence_lab.time_modulus: h={h:g} exceeds the trajectory length")
        vals = [grid.volume * float(np.sum(np.abs(coeffs[i + m] - coeffs[i]) ** 2)) for i in range(len(coeffs) - m)]
        moduli.append(math.sqrt(np.trapezoid(vals, times[: len(vals)])) if len(vals) > 1 else 0.0)
    fit = fit_order(h_list, moduli)
    return ModulusTable(field, tuple(h_list), tuple(moduli), fit.order, fit.ci_low, fit.ci_high)


@dataclass(frozen=True)
class WaveResidual:
    eps: float
    tau_stride: float
    residual: float
    relative: float
    term_norms: dict

    @property
    def F1(self) -> float:
        return self.term_norms["lap_div_u"]

    @property
    def F2(self) -> float:
        return self.term_norms["div_nonlinear"]


def pressure_wave_residual(traj: Trajectory, eps: float) -> WaveResidual:
    """Residual of p_tt - lap p + mu lap div u - div((u.grad)u + (div u)u/2) in the fast time tau = t/sqrt(eps)."""
    s = _uniform_stride(traj.times)
    if s > math.sqrt(eps) / 8 * (1 + 1e-9):
        raise ValueError(
            f"convergence_lab.pressure_wave_residual: save stride {s:g} too coarse; need <= sqrt(eps)/8 = {math.sqrt(eps) / 8:g}"
        )
    if len(traj) < 3:
        raise ValueError("convergence_lab.pressure_wave_residual: need at least 3 samples")
    grid = traj.grid
    dtau = s / math.sqrt(eps)
    k2 = grid.k2
    kd = grid.k_deriv
    names = ("p_tautau", "lap_p", "lap_div_u", "div_nonlinear")
    sq = {n: 0.0 for n in names}
    sq_res = 0.0
    states = traj.states
    for i in range(1, len(states) - 1):
        st = states[i]
        p_tt = (states[i + 1].p.coeffs - 2 * st.p.coeffs + states[i - 1].p.coeffs) / dtau**2
        lap_p = -k2 * st.p.coeffs
        div_u = 1j * np.sum(kd * st.u.coeffs, axis=0)
        lap_div = -st.mu * k2 * div_u
        du, _ = nonlinear_rhs(st)
        # nonlinear_rhs returns -((u.grad)u + (div u)u/2)
        div_n = -1j * np.sum(kd * du.coeffs, axis=0)
        terms = {"p_tautau": p_tt, "lap_p": -lap_p, "lap_div_u": lap_div, "div_nonlinear": -div_n}
        res = sum(terms.values())
        w = 0.5 if i in (1, len(states) - 2) else 1.0
        for n, c in terms.items():
            sq[n] += w * dtau * grid.volume * float(np.sum(np.abs(c) ** 2))
        sq_res += w * dtau * grid.volume * float(np.sum(np.abs(res) ** 2))
    norms = {n: math.sqrt(v) for n, v in sq.items()}
    largest = max(norms.values())
    resid = math.sqrt(sq_res)
    return WaveResidual(eps, dtau, resid, resid / largest if largest > 0 else 0.0, norms)


def dominant_frequency(times, values) -> float:
    """Angular frequency of the spectral peak of a sampled (complex) signal."""
    t = np.asarray(times, dtype=float)
    x = np.asarray(values)
    s = _uniform_stride(t)
    x = signal.detrend(x.real) + 1j * signal.detrend(x.imag) if np.iscomplexobj(x) else signal.detrend(x)
    x = x * signal.windows.hann(len(x))
    nfft = 8 * int(2 ** math.ceil(math.log2(len(x))))
    spec = np.abs(np.fft.fft(x, nfft)) ** 2
    freqs = np.fft.fftfreq(nfft, s)
    # fold negative frequencies onto positive ones
    half = nfft // 2
    power = spec[:half].copy()
    power[1:] += spec[nfft - 1 : nfft - half : -1]
    i = int(np.argmax(power[1:])) + 1
    shift = 0.0
    if 1 <= i < half - 1:
        a, b, c = np.log(power[i - 1 : i + 2] + 1e-300)
        denom = a - 2 * b + c
        shift = 0.5 * (a - c) / denom if denom != 0 else 0.0
    return float(2 * np.pi * (i + shift) * (freqs[1] - freqs[0]))


@dataclass(frozen=True)
class LayerMetrics:
    eps: tuple[float, ...]
    frequencies: tuple[float, ...]
    sqrt_eps_p0: tuple[float, ...]
    qu_half_times: tuple[float, ...]
    fit: Fit


def _half_time(times, values) -> float:
    values = np.asarray(values)
    i = int(np.argmax(values))
    below = np.nonzero(values[i:] <= 0.5 * values[i])[0]
    return float(times[i + below[0]] - times[i]) if below.size else float("inf")


def initial_layer_probe(report: SweepReport) -> LayerMetrics:
    if report.config.template.family != "incompatible":
        warnings.warn("initial_layer_probe: data family has no O(1) initial pressure; no layer to probe")
    freqs = []
    for r in report.records:
        if not r.mode_re:
            raise ValueError("initial_layer_probe: sweep did not track a pressure mode")
        freqs.append(dominant_frequency(r.times, np.array(r.mode_re) + 1j * np.array(r.mode_im)))
    return LayerMetrics(
        report.eps,
        tuple(freqs),
        tuple(r.sqrt_eps_p0_L2 for r in report.records),
        tuple(_half_time(r.times, r.Qu_L2) for r in report.records),
        fit_order(report.eps, freqs, "frequency"),
    )


@dataclass(frozen=True)
class StrichartzReport:
    header: str
    eps: tuple[float, ...]
    weighted_p: tuple[float, ...]
    weighted_dtp: tuple[float, ...]
    rhs_proxy: tuple[float, ...]

    @staticmethod
    def _no_growth(values) -> bool:
        finite = all(math.isfinite(v) for v in values)
        growing = len(values) > 1 and all(b > a for a, b in zip(values, values[1:]))
        return finite and not growing

    @property
    def bounded(self) -> bool:
        return self._no_growth(self.weighted_p) and self._no_growth(self.weighted_dtp)

    def csv(self) -> str:
        lines = [f"# {self.header}", "eps,weighted_p,weighted_dtp,rhs_proxy"]
        for row in zip(self.eps, self.weighted_p, self.weighted_dtp, self.rhs_proxy):
            lines.append(",".join(f"{v:.17g}" for v in row))
        return "\n".join(lines) + "\n"


def strichartz_scaling_report(report: SweepReport) -> StrichartzReport:
    needed = ("p_L4t_W-2,4x", "dtp_L4t_W-3,4x", "div_u_L2tx", "nonlinear_L1t_L3/2x")
    missing = [n for n in needed if n not in report.config.norms]
    if missing:
        raise ValueError(f"convergence_lab.strichartz_scaling_report: sweep is missing norms {missing}")
    T = report.config.template.T
    wp, wdp, rhs = [], [], []
    for r in report.records:
        wp.append(r.eps ** 0.375 * r.norms["p_L4t_W-2,4x"])
        wdp.append(r.eps ** 0.875 * r.norms["dtp_L4t_W-3,4x"])
        rhs.append(r.sqrt_eps_p0_L2 + r.div_u0_Hm1 + math.sqrt(T) * r.norms["div_u_L2tx"]
                   + r.norms["nonlinear_L1t_L3/2x"])
    return StrichartzReport(TORUS_CAVEAT, report.eps, tuple(wp), tuple(wdp), tuple(rhs))


@dataclass(frozen=True)
class PressureComparison:
    eps: float
    window: float
    abs_error: float
    rel_error: float
    rel_error_doubled: float
    out_of_range: bool
    times: tuple[float, ...]


def _window_weights(times: np.ndarray, center: float, width: float) -> np.ndarray:
    z = (times - center) / (width / 2)
    w = np.zeros_like(z)
    inside = np.abs(z) < 1
    w[inside] = np.exp(-1.0 / (1.0 - z[inside] ** 2))
    return w / w.sum()


def _averaged_comparison(ac_t, ac_p, ref_t, ref_p, width):
    T0, T1 = ac_t[0], ac_t[-1]
    diffs, sizes, kept = [], [], []
    for t, pl in zip(ref_t, ref_p):
        if width > 0 and (t - width / 2 < T0 - 1e-12 or t + width / 2 > T1 + 1e-12):
            continue
        if width > 0:
            w = _window_weights(ac_t, t, width)
            idx = np.nonzero(w)[0]
            avg = np.tensordot(w[idx], ac_p[idx], axes=1)
        else:
            avg = ac_p[int(np.argmin(np.abs(ac_t - t)))]
        diffs.append(float(np.sum(np.abs(avg - pl) ** 2)))
        sizes.append(float(np.sum(np.abs(pl) ** 2)))
        kept.append(t)
    if len(kept) < 2:
        return None
    d = math.sqrt(np.trapezoid(diffs, kept))
    n = math.sqrt(np.trapezoid(sizes, kept))
    return d, (d / n if n > 0 else (0.0 if d == 0 else math.inf)), tuple(kept)


def pressure_limit_check(ac: Trajectory, ref: Trajectory, window_factor: float = 8.0) -> PressureComparison:
    """Compare the window-averaged AC pressure with the limit pressure of the reference run.

    The average uses a C-infinity bump of total width window_factor*sqrt(eps);
    comparison times are the reference samples whose window fits inside the run.
    """
    if ac.grid != ref.grid:
        raise ValueError("convergence_lab.pressure_limit_check: trajectories live on different grids")
    eps = ac.states[0].eps
    grid = ac.grid
    ac_t = np.asarray(ac.times)
    ref_t = np.asarray(ref.times)
    for t in ref_t:
        if np.min(np.abs(ac_t - t)) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"convergence_lab.pressure_limit_check: reference time {t:g} is not an AC sample time")
    period = grid.length * math.sqrt(eps)  # acoustic period of the lowest mode
    width = window_factor * math.sqrt(eps)
    if width < period:
        raise ValueError(
            f"convergence_lab.pressure_limit_check: window {width:g} shorter than the acoustic period {period:g}"
        )
    if width < 4 * _uniform_stride(ac_t):
        raise ValueError("convergence_lab.pressure_limit_check: window does not resolve the AC sampling")
    ac_p = np.array([s.p.coeffs for s in ac.states])
    ref_p = [recover_pressure(s.u).coeffs for s in ref.states]
    span = ac_t[-1] - ac_t[0]
    out_of_range = bool(eps >= 1 or width > span / 4)
    main = _averaged_comparison(ac_t, ac_p, ref_t, ref_p, width)
    if main is None:
        out_of_range = True
        width = 0.0
        main = _averaged_comparison(ac_t, ac_p, ref_t, ref_p, 0.0)
    doubled = _averaged_comparison(ac_t, ac_p, ref_t, ref_p, 2 * width) if width > 0 else None
    abs_err, rel_err, kept = main
    return PressureComparison(
        eps, width, abs_err * math.sqrt(grid.volume), rel_err,
        doubled[1] if doubled is not None else float("nan"), out_of_range, kept,
    )
