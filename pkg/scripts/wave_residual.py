"""Pressure wave residual of a Taylor-Green run under stride halving.

    python scripts/wave_residual.py --eps 1e-3
"""

import argparse
import math

from acnsf.ac_solver import RunConfig, run
from acnsf.lab import pressure_wave_residual
from acnsf.spectral import make_grid


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dim", type=int, default=3)
    ap.add_argument("--n", type=int, default=32)
    ap.add_argument("--eps", type=float, default=1e-3)
    ap.add_argument("--periods", type=float, default=4.0, help="run length in units of sqrt(eps)")
    ap.add_argument("--divisions", type=int, nargs="+", default=[8, 16, 32])
    args = ap.parse_args()

    g = make_grid(args.dim, args.n)
    T = args.periods * math.sqrt(args.eps)
    print("stride,residual,relative")
    for m in args.divisions:
        stride = math.sqrt(args.eps) / m
        traj, _ = run(RunConfig(g, args.eps, T, dt=stride, family="taylor_green", save_stride=stride))
        r = pressure_wave_residual(traj, args.eps)
        print(f"{stride:.4g},{r.residual:.6g},{r.relative:.6g}")


if __name__ == "__main__":
    main()
