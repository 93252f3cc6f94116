"""Friedrichs-mollifier ratio tables on a synthesized H^1 field.

    python scripts/mollifier_tables.py --n 256 --out out/mollifier
"""

import argparse
from pathlib import Path

from acnsf.mollifier import check_friedrichs_y1, check_friedrichs_y2, power_law_field
from acnsf.spectral import make_grid


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dim", type=int, default=3)
    ap.add_argument("--n", type=int, default=256)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", type=Path, default=None)
    args = ap.parse_args()

    # unit box so that the smallest alpha still spans four grid cells
    g = make_grid(args.dim, args.n, length=1.0)
    f = power_law_field(g, args.dim / 2 + 1 + 0.01, seed=args.seed)
    # drop the scales the grid cannot resolve (alpha >= 4h)
    alphas = [2.0**-j for j in range(2, 7) if 2.0**-j >= 4.0 / args.n]
    tables = {f"y1_p{p}": check_friedrichs_y1(f, alphas, p) for p in (2, 4, 6)}
    for s, q, p in ((0, 2, 2), (1, 2, 2), (0, 2, 6)):
        tables[f"y2_s{s}_q{q}_p{p}"] = check_friedrichs_y2(f, alphas, s, q, p)
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
    for name, table in tables.items():
        rows = "\n".join(table.csv_rows()) + "\n"
        print(f"# {name}  slope {table.slope:.4f}  params {table.params}")
        print(rows)
        if args.out:
            (args.out / f"{name}.csv").write_text(rows)


if __name__ == "__main__":
    main()
