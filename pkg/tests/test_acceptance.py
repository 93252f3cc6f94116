"""Acceptance criteria, one test per criterion.

Each test records a single PASS/FAIL line through the ``criterion`` fixture;
the lines are repeated in the terminal summary. Tolerances are the stated
ones and are never relaxed to make a criterion pass.
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from acnsf.ac_solver import (
    ACState,
    LinearPropagator,
    RunConfig,
    Trajectory,
    choose_dt,
    initial_state,
    nonlinear_rhs,
    run,
)
from acnsf.cli import dispatch
from acnsf.io import read_checkpoint, write_checkpoint
from acnsf.lab import (
    SweepConfig,
    epsilon_sweep,
    initial_layer_probe,
    paper_q_exponent,
    pressure_limit_check,
    pressure_wave_residual,
    strichartz_scaling_report,
    strictly_decreasing_in_eps,
    time_modulus,
)
from acnsf.leray import project_P, project_Q
from acnsf.mollifier import check_friedrichs_y1, check_friedrichs_y2, power_law_field
from acnsf.reference import (
    RefState,
    make_test_fields,
    pressure_from_trace,
    recover_pressure,
    ref_run,
    weak_residual,
)
from acnsf.spectral import SpectralField, VectorField, divergence, inner, l2_norm, make_grid, to_spectral

EPS4 = (1e-1, 1e-2, 1e-3, 1e-4)
ALPHAS = tuple(2.0**-j for j in range(2, 7))


def random_vector(grid, seed):
    rng = np.random.default_rng(seed)
    return to_spectral(rng.standard_normal((grid.dim,) + grid.shape), grid)


def random_solenoidal(grid, seed, band=4):
    v = random_vector(grid, seed)
    kmag = grid.kmag * grid.length / (2 * np.pi)
    return project_P(VectorField(grid, v.coeffs * ((kmag <= band) & ~grid.nyquist_mask)))


def relative_drift(a, b):
    return max(l2_norm(x - y) / l2_norm(x) for x, y in ((a.u, b.u), (a.theta, b.theta), (a.p, b.p)))


@pytest.fixture(scope="module")
def main_sweep():
    """Taylor-Green sweep shared by criteria 5 and 10 (3D, n=32, T=1)."""
    g = make_grid(3, 32)
    tpl = RunConfig(g, EPS4[0], 1.0, dt=4e-3, family="taylor_green", save_stride=2e-2)
    start = time.perf_counter()
    report = epsilon_sweep(SweepConfig(EPS4, tpl, compare_stride=2e-2, ref_dt=2e-3))
    return report, time.perf_counter() - start


# 1 -----------------------------------------------------------------------------------


def test_c01_projector_algebra(criterion):
    g = make_grid(3, 32)
    start = time.perf_counter()
    worst = 0.0
    for seed in range(50):
        v = random_vector(g, seed)
        pv, qv = project_P(v), project_Q(v)
        errs = (
            l2_norm(project_P(pv) - pv),
            l2_norm(project_P(qv)),
            l2_norm(v - pv - qv),
            l2_norm(divergence(pv)),
        )
        worst = max(worst, max(errs) / l2_norm(v))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-11 and elapsed < 10
    assert criterion(1, ok, f"projector algebra: worst relative defect {worst:.2e}, {elapsed:.1f} s")


# 2 -----------------------------------------------------------------------------------


def test_c02_energy_identity(criterion):
    start = time.perf_counter()
    g = make_grid(3, 16)
    _, heat = run(RunConfig(g, 1e-2, 1.0, dt=0.01, family="heat_decay", save_stride=0.01), keep_states=False)
    heat_res = max(r.balance_residual for r in heat)

    res = []
    for dt in (4e-3, 2e-3, 1e-3):
        cfg = RunConfig(g, 1e-2, 0.4, dt=dt, family="random", seed=0, save_stride=0.04)
        _, recs = run(cfg, keep_states=False)
        res.append(max(r.balance_residual for r in recs))
    order = np.polyfit(np.log([4e-3, 2e-3, 1e-3]), np.log(res), 1)[0]
    decreasing = res[0] > res[1] > res[2]
    elapsed = time.perf_counter() - start
    ok = heat_res <= 1e-8 and decreasing and order >= 1.9 and elapsed < 120
    assert criterion(
        2, ok,
        f"energy identity: heat residual {heat_res:.1e}; random-data residuals "
        f"{', '.join(f'{r:.2e}' for r in res)}, order {order:.2f}; {elapsed:.0f} s",
    )


# 3 -----------------------------------------------------------------------------------


def test_c03_skew_symmetry(criterion):
    g = make_grid(3, 16, pad_factor=Fraction(2))
    worst = 0.0
    for seed in range(20):
        # solver states carry no Nyquist content, so draw from that space
        keep = ~g.nyquist_mask
        rng = np.random.default_rng(seed)
        u = VectorField(g, random_vector(g, 100 + seed).coeffs * keep)
        th = SpectralField(g, to_spectral(rng.standard_normal(g.shape), g).coeffs * keep)
        s = ACState(u, th, g.zeros(), 1e-2)
        du, _ = nonlinear_rhs(s)
        grad = math.sqrt(g.volume * float(np.sum(g.k2 * np.abs(u.coeffs) ** 2)))
        worst = max(worst, abs(inner(du, u)) / (l2_norm(u) * grad))
    assert criterion(3, worst <= 1e-10, f"skew-symmetry: worst |(N(u),u)|/(|u||grad u|) = {worst:.1e}")


# 4 -----------------------------------------------------------------------------------


def test_c04_stiffness_removal(criterion):
    g = make_grid(3, 16)
    dts, finals = [], []
    for eps in (1e-1, 1e-4):
        cfg = RunConfig(g, eps, 0.5, cfl=0.5, family="random", seed=2, save_stride=0.1)
        dts.append(choose_dt(cfg, initial_state(cfg).u))
        _, recs = run(cfg, keep_states=False)
        finals.append(recs[-1])
    completed = all(abs(r.t - 0.5) < 1e-12 and math.isfinite(r.E) for r in finals)
    # an explicit acoustic scheme would need dt of order sqrt(eps) * h
    acoustic = math.sqrt(1e-4) * g.length / g.n

    # per-mode invariant |div u|^2 / |k|^2 + eps |p|^2 of the inviscid linear flow
    prop = LinearPropagator(g, 1e-4, 0.0, 1.0, dts[1])
    live = g.kd2 > 0
    u = random_vector(g, 7).coeffs
    p = random_vector(g, 8).coeffs[0]
    theta = g.zeros().coeffs

    def invariant(u, p):
        s = np.sum(g.k_deriv * u, axis=0)
        return (np.abs(s) ** 2 / np.where(live, g.kd2, 1.0) + 1e-4 * np.abs(p) ** 2)[live]

    worst = 0.0
    for _ in range(10):
        before = invariant(u, p)
        u, _, p = prop(u, theta, p)
        worst = max(worst, float(np.max(np.abs(invariant(u, p) - before) / before)))
    ok = completed and dts[0] == dts[1] and worst <= 1e-12
    assert criterion(
        4, ok,
        f"stiffness removal: dt {dts[0]:.3e} at eps=1e-1 and {dts[1]:.3e} at eps=1e-4 "
        f"(acoustic scale {acoustic:.1e}); mu=0 invariant drift {worst:.1e} per step",
    )


# 5 -----------------------------------------------------------------------------------


def test_c05_main_convergence(criterion, main_sweep):
    report, elapsed = main_sweep
    names = ("Qu_L2t_L4x", "Pu_err_L2tx", "theta_err_L2tx")
    parts, ok = [], elapsed < 15 * 60
    for name in names:
        fit = report.fits[name]
        good = strictly_decreasing_in_eps(report.series(name)) and fit.order > 0
        ok = ok and good
        parts.append(f"{name} order {fit.order:.3f}")
    print(report.norms_csv())
    print(report.fits_csv())
    assert criterion(
        5, ok,
        f"main convergence: {'; '.join(parts)}; reference bound exponent {paper_q_exponent(4):.4f} (1/72); "
        f"{elapsed:.0f} s",
    )


# 6 -----------------------------------------------------------------------------------


def test_c06_equicontinuity(criterion):
    g = make_grid(3, 16)
    traj, _ = run(RunConfig(g, 1e-3, 1.0, dt=2e-3, family="taylor_green", save_stride=1e-2))
    hs = (0.02, 0.04, 0.08, 0.16)
    exps = {f: time_modulus(traj, f, hs).exponent for f in ("Pu", "theta")}

    # heat case: theta = sin(x) e^{-t} on the 3D box
    g8 = make_grid(3, 8)
    base = to_spectral(np.sin(g8.coords[0]), g8)
    heat = Trajectory()
    T, stride = 1.0, 1e-4
    for i in range(round(T / stride) + 1):
        t = i * stride
        heat.append(RefState(g8.vector_zeros(), SpectralField(g8, base.coeffs * math.exp(-t)), t=t))
    worst = 0.0
    for h in (0.05, 0.1, 0.2):
        got = time_modulus(heat, "theta", [h]).moduli[0]
        want = (1 - math.exp(-h)) * math.sqrt((1 - math.exp(-2 * (T - h))) / 2) * math.sqrt(g8.volume / 2)
        worst = max(worst, abs(got / want - 1))
    ok = exps["Pu"] >= 0.2 and exps["theta"] >= 0.2 and worst <= 1e-8
    assert criterion(
        6, ok,
        f"equicontinuity: exponents Pu {exps['Pu']:.3f}, theta {exps['theta']:.3f} (need >= 1/5); "
        f"heat modulus relative error {worst:.1e}",
    )


# 7 -----------------------------------------------------------------------------------


def linear_acoustic(eps, stride, T=0.2, amplitude=1e-8):
    g = make_grid(2, 16)
    p = to_spectral(amplitude * np.sin(g.coords[0]), g).coeffs
    u, th = g.vector_zeros().coeffs, g.zeros().coeffs
    prop = LinearPropagator(g, eps, 0.0, 1.0, stride)
    traj = Trajectory()
    for i in range(round(T / stride) + 1):
        traj.append(ACState(VectorField(g, u), SpectralField(g, th), SpectralField(g, p), eps, 0.0, 1.0, i * stride))
        u, th, p = prop(u, th, p)
    return traj


def test_c07_pressure_wave(criterion):
    eps = 1e-2
    lin = [pressure_wave_residual(linear_acoustic(eps, math.sqrt(eps) / f), eps).relative for f in (10, 20, 40)]
    orders = np.log2(np.array(lin[:-1]) / np.array(lin[1:]))

    g = make_grid(3, 32)
    eps = 1e-3
    rel = []
    for f in (8, 16):
        stride = math.sqrt(eps) / f
        traj, _ = run(RunConfig(g, eps, 4 * math.sqrt(eps), dt=stride, family="taylor_green", save_stride=stride))
        rel.append(pressure_wave_residual(traj, eps).relative)
    ok = bool(np.all(np.abs(orders - 2) <= 0.2)) and rel[-1] <= 0.05
    assert criterion(
        7, ok,
        f"pressure wave: linear orders {', '.join(f'{o:.2f}' for o in orders)}; "
        f"nonlinear relative residual {rel[0]:.2%} -> {rel[1]:.2%}",
    )


# 8 -----------------------------------------------------------------------------------


def test_c08_initial_layer(criterion):
    g = make_grid(3, 16)
    tpl = RunConfig(g, 1e-2, 2.0, dt=2e-3, family="incompatible", seed=1, save_stride=2e-3)
    report = epsilon_sweep(SweepConfig((1e-2, 1e-3, 1e-4), tpl, reference=False, norms=("Qu_L2t_L4x",),
                                       tracked_mode=(1, 0, 0)))
    layer = initial_layer_probe(report)
    slope = layer.fit.order
    ok = abs(slope + 0.5) <= 0.05
    freqs = ", ".join(f"{w:.1f}" for w in layer.frequencies)
    assert criterion(8, ok, f"initial layer: frequencies {freqs}; fitted slope {slope:.3f}")


# 9 -----------------------------------------------------------------------------------


def test_c09_limit_pressure(criterion):
    g = make_grid(2, 32)
    x, y = g.coords
    T, dt = 1.0, 5e-4
    rels, flags = [], []
    ref = None
    for eps in (1e-2, 1e-3, 1e-4):
        ac, _ = run(RunConfig(g, eps, T, dt=dt, family="taylor_green", save_stride=5e-3))
        if ref is None:
            s0 = ac.states[0]
            ref, _ = ref_run(s0.u, s0.theta, T, dt, save_stride=0.05)
        cmp_ = pressure_limit_check(ac, ref)
        rels.append(cmp_.rel_error)
        flags.append(cmp_.out_of_range)
    # closed form of the limit pressure for this flow (sign discussed in the ledger)
    shape = 0.25 * (np.cos(2 * x) + np.cos(2 * y))
    closed = max(
        l2_norm(recover_pressure(s.u) - to_spectral(shape * math.exp(-4 * s.t), g)) for s in ref.states
    ) / l2_norm(to_spectral(shape, g))

    trace = 0.0
    for dim, n in ((2, 32), (3, 16)):
        gg = make_grid(dim, n)
        for seed in range(10):
            u = random_solenoidal(gg, seed)
            a, b = recover_pressure(u), pressure_from_trace(u)
            trace = max(trace, l2_norm(a - b) / l2_norm(a))
    monotone = rels[0] > rels[1] > rels[2]
    ok = monotone and rels[-1] < 0.05 and trace <= 1e-10 and closed <= 1e-6
    flagged = ", ".join(f"{r:.4f}{' (out of range)' if f else ''}" for r, f in zip(rels, flags))
    assert criterion(
        9, ok,
        f"limit pressure: relative errors {flagged}; closed-form check {closed:.1e}; trace identity {trace:.1e}",
    )


# 10 ----------------------------------------------------------------------------------


def test_c10_strichartz(criterion, main_sweep):
    report, _ = main_sweep
    s = strichartz_scaling_report(report)
    print(s.csv())
    wp = ", ".join(f"{v:.3g}" for v in s.weighted_p)
    wdp = ", ".join(f"{v:.3g}" for v in s.weighted_dtp)
    assert criterion(10, s.bounded, f"weighted Strichartz: p [{wp}], dt p [{wdp}]; caveat: {s.header}")


# 11 ----------------------------------------------------------------------------------


def test_c11_mollifier(criterion):
    g = make_grid(3, 256, length=1.0)
    f = power_law_field(g, 3 / 2 + 1 + 0.01, seed=0)
    parts, ok = [], True
    for p in (2, 4, 6):
        table = check_friedrichs_y1(f, ALPHAS, p)
        need = (1 - table.params["sigma"]) - 0.1
        ok = ok and table.finite and table.slope >= need
        parts.append(f"p={p} slope {table.slope:.3f} (need {need:.2f})")
    for s, q, p in ((0, 2, 2), (1, 2, 2), (0, 2, 6)):
        table = check_friedrichs_y2(f, ALPHAS, s, q, p)
        ok = ok and table.finite
        parts.append(f"y2(s={s},q={q},p={p}) max ratio {table.max_ratio:.3g}")
    assert criterion(11, ok, "mollifier: " + "; ".join(parts))


# 12 ----------------------------------------------------------------------------------


def test_c12_weak_solution(criterion):
    g = make_grid(2, 64)
    s = initial_state(RunConfig(g, 1e-2, 1.0, dt=1e-3, family="random", seed=0))
    traj, _ = ref_run(s.u, s.theta, 1.0, 1e-3, save_stride=1e-3)
    worst = max(r.normalized for r in weak_residual(traj, make_test_fields(g, 1.0, 10, seed=0)))

    # explicit midpoint gains energy at O(dt^2) over the run, so the sampled inequality
    # carries a time-step tolerance that must shrink at order >= 2
    dts = (1e-3, 5e-4, 2.5e-4)
    excess = []
    for dt in dts:
        _, recs = ref_run(s.u, s.theta, 1.0, dt, save_stride=1e-3, keep_states=False)
        E0 = recs[0].kinetic_thermal
        excess.append(max(max((r.kinetic_thermal + r.D - E0) / E0 for r in recs), 0.0))
    order = np.polyfit(np.log(dts), np.log(np.maximum(excess, 1e-300)), 1)[0]
    ok = worst <= 1e-6 and (excess[0] == 0 or order >= 2)
    assert criterion(
        12, ok,
        f"weak solution: normalized residual {worst:.1e}; energy excess "
        f"{', '.join(f'{e:.1e}' for e in excess)} for dt = 1e-3, 5e-4, 2.5e-4, order {order:.2f}",
    )


# 13 ----------------------------------------------------------------------------------


SWEEP_CFG = """\
[grid]
dim = 3
n = 8

[data]
family = random
seed = 11

[time]
T = 0.1
dt = 0.01
save_stride = 0.05

[sweep]
eps_list = 1e-1, 1e-2, 1e-3
"""


def test_c13_determinism_and_restart(criterion, tmp_path):
    cfg = tmp_path / "sweep.cfg"
    cfg.write_text(SWEEP_CFG)
    outs = [tmp_path / "a", tmp_path / "b"]
    for out in outs:
        assert dispatch(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
    files = sorted(p.name for p in outs[0].iterdir())
    identical = files == sorted(p.name for p in outs[1].iterdir()) and all(
        (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes() for name in files
    )

    g = make_grid(3, 16)
    full = RunConfig(g, 1e-2, 0.2, dt=0.01, family="random", seed=4, save_stride=0.1)
    traj, _ = run(full)
    half, _ = run(RunConfig(g, 1e-2, 0.1, dt=0.01, family="random", seed=4))
    path = tmp_path / "half.ckpt"
    write_checkpoint(half.states[-1], path)
    resumed, _ = run(full, state=read_checkpoint(path, g))
    drift = relative_drift(traj.states[-1], resumed.states[-1])
    ok = identical and drift <= 1e-12
    assert criterion(
        13, ok,
        f"determinism: {len(files)} sweep outputs byte-identical={identical}; restart drift {drift:.1e}",
    )
