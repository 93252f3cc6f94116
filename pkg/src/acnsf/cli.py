"""Command-line entry point.

Config files are sectioned key=value text::

    [grid]
    dim = 3
    n = 32
    length = 2pi        # optional, default 2pi
    pad = 3/2           # optional, 3/2 or 2
    [physics]
    eps = 1e-3
    mu = 1              # optional
    kappa = 1           # optional
    [time]
    T = 1
    dt = 2e-3           # or cfl = 0.5
    save_stride = 1e-2  # optional
    [data]
    family = taylor_green
    seed = 0
    [sweep]
    eps_list = 1e-1,1e-2,1e-3
    [diagnostics]
    norms = Qu_L2t_L4x,Pu_err_L2tx

A [sweep] section turns the file into a sweep config; then [physics] eps
may be omitted.  Exit codes: 0 success, 1 numerical failure or failed
property table, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import json
import math
import re
import sys
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path

import numpy as np

from .ac_solver import NumericalFailure, RunConfig, initial_state, run
from .initial_data import FAMILIES

__all__ = ["ConfigError", "parse_config", "dispatch", "main"]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class _Key:
    kind: str  # int, float, pad, str, floats, ints, strs, bool
    required: bool = False
    check: str | None = None  # "pos", "nonneg", "even"


_SCHEMA = {
    "grid": {"dim": _Key("int", True), "n": _Key("int", True), "length": _Key("float", check="pos"),
             "pad": _Key("pad")},
    "physics": {"eps": _Key("float", check="pos"), "mu": _Key("float", check="nonneg"),
                "kappa": _Key("float", check="nonneg")},
    "time": {"T": _Key("float", True, "pos"), "dt": _Key("float", check="pos"), "cfl": _Key("float", check="pos"),
             "save_stride": _Key("float", check="pos")},
    "data": {"family": _Key("str"), "seed": _Key("int", check="nonneg")},
    "sweep": {"eps_list": _Key("floats", True), "compare_stride": _Key("float", check="pos"),
              "ref_dt": _Key("float", check="pos"), "workers": _Key("int", check="pos"),
              "tracked_mode": _Key("ints"), "reference": _Key("bool")},
    "diagnostics": {"norms": _Key("strs")},
}

_PI_FORM = re.compile(r"^\s*([0-9.eE+-]*)\s*\*?\s*pi\s*$")


def _parse_float(text: str) -> float:
    m = _PI_FORM.match(text)
    if m:
        coef = m.group(1)
        return (float(coef) if coef not in ("", "+") else 1.0) * math.pi
    return float(text)


def _convert(raw: str, key: _Key):
    if key.kind == "int":
        return int(raw)
    if key.kind == "float":
        return _parse_float(raw)
    if key.kind == "pad":
        return Fraction(raw)
    if key.kind == "str":
        return raw
    if key.kind == "bool":
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(raw)
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    if key.kind == "floats":
        return tuple(_parse_float(p) for p in parts)
    if key.kind == "ints":
        return tuple(int(p) for p in parts)
    return tuple(parts)


def _range_message(value, key: _Key) -> str | None:
    if key.check == "pos" and not value > 0:
        return "must be > 0"
    if key.check == "nonneg" and not value >= 0:
        return "must be >= 0"
    return None


def _read_sections(text: str):
    sections, lines = {}, {}
    current = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if current not in _SCHEMA:
                raise ConfigError(f"unknown section [{current}] (line {lineno})")
            sections.setdefault(current, {})
            lines.setdefault(current, {})["__header__"] = lineno
            continue
        if current is None:
            raise ConfigError(f"key outside any section (line {lineno})")
        if "=" not in line:
            raise ConfigError(f"[{current}] expected key = value (line {lineno})")
        name, raw = (s.strip() for s in line.split("=", 1))
        schema = _SCHEMA[current]
        if name not in schema:
            raise ConfigError(f"[{current}] unknown key {name!r} (line {lineno})")
        if name in sections[current]:
            raise ConfigError(f"[{current}] duplicate key {name!r} (line {lineno})")
        try:
            value = _convert(raw, schema[name])
        except (ValueError, ZeroDivisionError):
            raise ConfigError(f"[{current}] {name} has invalid value {raw!r} (line {lineno})") from None
        if schema[name].kind == "floats":
            for v in value:
                msg = _range_message(v, _Key("float", check="pos"))
                if msg:
                    raise ConfigError(f"[{current}] {name} entries {msg} (line {lineno})")
        else:
            msg = _range_message(value, schema[name])
            if msg:
                raise ConfigError(f"[{current}] {name} {msg} (line {lineno})")
        sections[current][name] = value
        lines[current][name] = lineno
    return sections, lines


def parse_config(text: str):
    """Parse config text into a RunConfig, or a SweepConfig when a [sweep] section is present."""
    from .lab import DEFAULT_NORMS, SweepConfig
    from .spectral import GridSpec

    sections, lines = _read_sections(text)
    last_line = max(1, len(text.splitlines()))
    is_sweep = "sweep" in sections

    def where(section, name=None):
        sec = lines.get(section, {})
        return sec.get(name, sec.get("__header__", last_line))

    for section, schema in _SCHEMA.items():
        if section == "sweep" and not is_sweep:
            continue
        for name, key in schema.items():
            if key.required and name not in sections.get(section, {}):
                if section in ("grid", "time") or section in sections:
                    raise ConfigError(f"[{section}] missing required key {name!r} (line {where(section)})")
    phys = sections.get("physics", {})
    if not is_sweep and "eps" not in phys:
        raise ConfigError(f"[physics] missing required key 'eps' (line {where('physics')})")
    tm = sections["time"]
    if "dt" not in tm and "cfl" not in tm:
        raise ConfigError(f"[time] one of 'dt' or 'cfl' is required (line {where('time')})")

    g = sections["grid"]
    try:
        grid = GridSpec(g["dim"], g["n"], g.get("length", 2 * math.pi), g.get("pad", Fraction(3, 2)))
    except ValueError as exc:
        raise ConfigError(f"[grid] {exc} (line {where('grid')})") from None
    data = sections.get("data", {})
    family = data.get("family", "taylor_green")
    if family not in FAMILIES:
        raise ConfigError(f"[data] family must be one of {FAMILIES} (line {where('data', 'family')})")
    eps_list = sections["sweep"]["eps_list"] if is_sweep else None
    eps = phys.get("eps", eps_list[0] if eps_list else None)
    try:
        config = RunConfig(grid, eps, tm["T"], phys.get("mu", 1.0), phys.get("kappa", 1.0), tm.get("dt"),
                           tm.get("cfl"), family, data.get("seed", 0), tm.get("save_stride"))
    except ValueError as exc:
        raise ConfigError(f"[time] {exc} (line {where('time')})") from None
    if not is_sweep:
        return config
    sw = sections["sweep"]
    norms = sections.get("diagnostics", {}).get("norms", DEFAULT_NORMS)
    reference = sw.get("reference", True)
    if not reference:
        norms = tuple(n for n in norms if n not in ("Pu_err_L2tx", "theta_err_L2tx"))
    try:
        return SweepConfig(eps_list, config, reference, norms, sw.get("compare_stride"), sw.get("ref_dt"),
                           sw.get("tracked_mode"), sw.get("workers", 1))
    except ValueError as exc:
        raise ConfigError(f"[sweep] {exc} (line {where('sweep')})") from None


# -- subcommands -------------------------------------------------------------------------


def _load_config(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


def _require_run(config):
    if not isinstance(config, RunConfig):
        raise ConfigError("this subcommand needs a run config (no [sweep] section)")
    return config


def _cmd_run(args) -> int:
    from .io import emit_diagnostics, read_checkpoint, write_checkpoint

    config = _require_run(_load_config(args.config))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    state = read_checkpoint(args.restart, config.grid) if args.restart else None
    traj, records = run(config, state=state, keep_states=args.checkpoint)
    (out / "diagnostics.csv").write_text(emit_diagnostics(records, "csv"))
    (out / "diagnostics.ndjson").write_text(emit_diagnostics(records, "ndjson"))
    if args.checkpoint:
        write_checkpoint(traj.states[-1], out / "final.ckpt")
    return 0


def _cmd_sweep(args) -> int:
    from .lab import epsilon_sweep, q_component_decay, strichartz_scaling_report

    config = _load_config(args.config)
    if isinstance(config, RunConfig):
        raise ConfigError("sweep needs a [sweep] section with eps_list")
    if args.workers is not None:
        config = replace(config, workers=args.workers)
    report = epsilon_sweep(config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.ndjson").write_text(report.to_ndjson())
    (out / "norms.csv").write_text(report.norms_csv())
    (out / "fits.csv").write_text(report.fits_csv())
    try:
        (out / "strichartz.csv").write_text(strichartz_scaling_report(report).csv())
    except ValueError:
        pass
    if "Qu_L2t_L4x" in config.norms and len(report.records) >= 3:
        q = q_component_decay(report, 4.0)
        (out / "q_decay.csv").write_text(
            "p,order,ci_low,ci_high,paper_exponent,decreasing\n"
            f"4,{q.fit.order:.17g},{q.fit.ci_low:.17g},{q.fit.ci_high:.17g},{q.paper_exponent:.17g},{q.decreasing}\n"
        )
    return 0


def _print_table(rows, out=None) -> bool:
    out = sys.stdout if out is None else out
    ok = True
    print(f"{'property':<40} {'value':>12} {'tolerance':>12}  result", file=out)
    for name, value, tol in rows:
        passed = bool(value <= tol)
        ok &= passed
        print(f"{name:<40} {value:>12.3e} {tol:>12.3e}  {'pass' if passed else 'FAIL'}", file=out)
    return ok


def projector_properties(dim: int = 3, n: int = 32, count: int = 50, seed: int = 0):
    """Worst relative errors of the projector identities over random fields."""
    from .leray import project_P, project_Q
    from .spectral import VectorField, divergence, l2_norm, make_grid, to_spectral

    grid = make_grid(dim, n)
    rng = np.random.default_rng(seed)
    worst = {"|P^2 v - P v|": 0.0, "|P Q v|": 0.0, "|v - P v - Q v|": 0.0, "|div P v|": 0.0}
    for _ in range(count):
        v = to_spectral(rng.standard_normal((dim,) + grid.shape), grid)
        nv = l2_norm(v)
        Pv, Qv = project_P(v), project_Q(v)
        worst["|P^2 v - P v|"] = max(worst["|P^2 v - P v|"], l2_norm(project_P(Pv) - Pv) / nv)
        worst["|P Q v|"] = max(worst["|P Q v|"], l2_norm(project_P(Qv)) / nv)
        worst["|v - P v - Q v|"] = max(worst["|v - P v - Q v|"], l2_norm(v - Pv - Qv) / nv)
        worst["|div P v|"] = max(worst["|div P v|"], l2_norm(divergence(Pv)) / nv)
    return worst


def _cmd_check_projectors(args) -> int:
    worst = projector_properties(args.dim, args.n, args.count, args.seed)
    return 0 if _print_table([(k, v, 1e-11) for k, v in worst.items()]) else 1


def mollifier_properties(dim: int = 2, n: int = 512, seed: int = 0):
    from .leray import project_P
    from .mollifier import MollifierSpec, check_friedrichs_y1, check_friedrichs_y2, kernel_mass, kernel_multiplier, mollify
    from .spectral import l2_norm, make_grid, to_spectral

    grid = make_grid(dim, n)
    rng = np.random.default_rng(seed)
    alphas = [grid.length / 4 * 2.0**-j for j in range(4)]
    alphas = [a for a in alphas if a < 1 and a >= 4 * grid.spacing]
    rows = []
    resolved = MollifierSpec(min(0.99, grid.length / 4))
    rows.append(("kernel mass - 1", abs(kernel_mass(grid, resolved) - 1.0), 1e-10))
    bound = max(float(np.max(np.abs(kernel_multiplier(grid, MollifierSpec(a))))) for a in alphas)
    rows.append(("max |kernel transform| - 1", max(bound - 1.0, 0.0), 1e-14))
    v = to_spectral(rng.standard_normal((dim,) + grid.shape), grid)
    m = MollifierSpec(alphas[-1])
    rows.append(("|J P v - P J v| / |v|", l2_norm(mollify(project_P(v), m) - project_P(mollify(v, m))) / l2_norm(v), 1e-12))
    f = to_spectral(rng.standard_normal(grid.shape), grid)
    f = type(f)(grid, f.coeffs - f.coeffs.flat[0] * (np.arange(f.coeffs.size) == 0).reshape(f.coeffs.shape))
    y1 = check_friedrichs_y1(f, alphas, 4.0)
    y2 = check_friedrichs_y2(f, alphas, 1.0, 2.0, 2.0)
    rows.append(("y1 ratio table non-finite", 0.0 if y1.finite else 1.0, 0.0))
    rows.append(("y2 ratio table non-finite", 0.0 if y2.finite else 1.0, 0.0))
    return rows


def _cmd_mollifier_test(args) -> int:
    return 0 if _print_table(mollifier_properties(args.dim, args.n, args.seed)) else 1


def _cmd_wave_residual(args) -> int:
    from .lab import pressure_wave_residual

    config = _require_run(_load_config(args.config))
    traj, _ = run(config)
    res = pressure_wave_residual(traj, config.eps)
    print("term,L2_norm")
    for name, val in res.term_norms.items():
        print(f"{name},{val:.17g}")
    print(f"residual,{res.residual:.17g}")
    print(f"relative,{res.relative:.17g}")
    return 0


def _cmd_compare(args) -> int:
    from .lab import pressure_limit_check
    from .leray import project_P
    from .reference import ref_run
    from .spectral import l2_norm

    config = _require_run(_load_config(args.config))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    state = initial_state(config)
    ac, _ = run(config, state=state)
    stride = config.save_stride if config.save_stride is not None else config.T
    ref, _ = ref_run(state.u, state.theta, config.T, ac.times[1] - ac.times[0] if len(ac) > 1 else config.T,
                     save_stride=stride, mu=config.mu, kappa=config.kappa)
    cmp = pressure_limit_check(ac, ref, args.window_factor)
    (out / "pressure_limit.json").write_text(json.dumps({
        "eps": cmp.eps, "window": cmp.window, "abs_error": cmp.abs_error, "rel_error": cmp.rel_error,
        "rel_error_doubled_window": cmp.rel_error_doubled, "out_of_range": cmp.out_of_range,
    }, indent=1) + "\n")
    lines = ["t,Pu_err_L2,theta_err_L2"]
    for a, r in zip(ac.states, ref.states):
        lines.append(f"{a.t:.17g},{l2_norm(project_P(a.u) - r.u):.17g},{l2_norm(a.theta - r.theta):.17g}")
    (out / "ac_vs_reference.csv").write_text("\n".join(lines) + "\n")
    return 0


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="acnsf", description="artificial compressibility experiments")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="single AC run")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--checkpoint", action="store_true", help="write out/final.ckpt")
    p.add_argument("--restart", help="start from this checkpoint")
    p = sub.add_parser("sweep", help="eps sweep with reference run")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int)
    p = sub.add_parser("check-projectors", help="projector property table")
    p.add_argument("--dim", type=int, default=3)
    p.add_argument("--n", type=int, default=32)
    p.add_argument("--count", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p = sub.add_parser("mollifier-test", help="mollifier property table")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--n", type=int, default=512)
    p.add_argument("--seed", type=int, default=0)
    p = sub.add_parser("wave-residual", help="pressure wave residual of a run")
    p.add_argument("--config", required=True)
    p = sub.add_parser("compare", help="AC run against the incompressible reference")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--window-factor", type=float, default=8.0)
    return ap


_COMMANDS = {
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "check-projectors": _cmd_check_projectors,
    "mollifier-test": _cmd_mollifier_test,
    "wave-residual": _cmd_wave_residual,
    "compare": _cmd_compare,
}


def dispatch(argv) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 2
    try:
        return _COMMANDS[args.command](args)
    except NumericalFailure as exc:
        print(f"experiment_cli.{args.command}: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, ValueError, OSError) as exc:
        print(f"experiment_cli.{args.command}: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))
