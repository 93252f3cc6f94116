"""Window-averaged AC pressure against the limit pressure, Taylor-Green data.

    python scripts/pressure_limit.py --eps 1e-2 1e-3 1e-4
"""

import argparse

from acnsf.ac_solver import RunConfig, run
from acnsf.lab import pressure_limit_check
from acnsf.reference import ref_run
from acnsf.spectral import make_grid


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dim", type=int, default=2)
    ap.add_argument("--n", type=int, default=32)
    ap.add_argument("--T", type=float, default=1.0)
    ap.add_argument("--dt", type=float, default=5e-4)
    ap.add_argument("--stride", type=float, default=5e-3)
    ap.add_argument("--ref-stride", type=float, default=5e-2)
    ap.add_argument("--window", type=float, default=8.0, help="window width in units of sqrt(eps)")
    ap.add_argument("--family", default="taylor_green")
    ap.add_argument("--eps", type=float, nargs="+", default=[1e-2, 1e-3, 1e-4])
    args = ap.parse_args()

    g = make_grid(args.dim, args.n)
    ref = None
    print("eps,window,rel_error,rel_error_doubled,out_of_range")
    for eps in args.eps:
        ac, _ = run(RunConfig(g, eps, args.T, dt=args.dt, family=args.family, save_stride=args.stride))
        if ref is None:
            s0 = ac.states[0]
            ref, _ = ref_run(s0.u, s0.theta, args.T, args.dt, save_stride=args.ref_stride)
        c = pressure_limit_check(ac, ref, window_factor=args.window)
        print(f"{eps:g},{c.window:.4g},{c.rel_error:.6g},{c.rel_error_doubled:.6g},{c.out_of_range}")


if __name__ == "__main__":
    main()
