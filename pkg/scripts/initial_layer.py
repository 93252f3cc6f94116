"""Initial-layer probe: dominant pressure frequency against eps for incompatible data.

    python scripts/initial_layer.py --dim 3 --n 16
"""

import argparse

from acnsf.ac_solver import RunConfig
from acnsf.lab import SweepConfig, epsilon_sweep, initial_layer_probe
from acnsf.spectral import make_grid


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dim", type=int, default=3)
    ap.add_argument("--n", type=int, default=16)
    ap.add_argument("--T", type=float, default=2.0)
    ap.add_argument("--dt", type=float, default=2e-3)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--eps", type=float, nargs="+", default=[1e-2, 1e-3, 1e-4])
    args = ap.parse_args()

    tpl = RunConfig(make_grid(args.dim, args.n), args.eps[0], args.T, dt=args.dt, family="incompatible",
                    seed=args.seed, save_stride=args.dt)
    mode = (1,) + (0,) * (args.dim - 1)
    report = epsilon_sweep(SweepConfig(tuple(args.eps), tpl, reference=False, norms=("Qu_L2t_L4x",),
                                       tracked_mode=mode))
    layer = initial_layer_probe(report)
    print("eps,frequency,sqrt_eps_p0_L2,Qu_half_time")
    for row in zip(layer.eps, layer.frequencies, layer.sqrt_eps_p0, layer.qu_half_times):
        print(",".join(f"{v:.6g}" for v in row))
    print(f"fitted slope {layer.fit.order:.4f} (expected -0.5)")


if __name__ == "__main__":
    main()
