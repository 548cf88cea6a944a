"""Asymptotic power of the known-scale log-LSS test as a function of s.

    python scripts/run_power_curve.py --c 1 --h0 0.2 0.4 --out results/power.csv
"""

import argparse
import csv
import sys

import numpy as np

from ellipspec.sphericity import s_bar, tlr_power


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--c", type=float, default=1.0)
    ap.add_argument("--h0", type=float, nargs="+", default=[0.2, 0.4])
    ap.add_argument("--tau", type=float, nargs="+", default=[0.0, 2.0])
    ap.add_argument("--alpha", type=float, default=0.05)
    ap.add_argument("--points", type=int, default=200)
    ap.add_argument("--out")
    args = ap.parse_args()

    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(fh)
    w.writerow(["tau", "h0", "s", "power"])
    for tau in args.tau:
        for h0 in args.h0:
            grid = np.linspace(0.0, s_bar(args.c, h0), args.points + 2)[1:-1]
            power = [tlr_power(args.c, s, h0, tau, args.alpha) for s in grid]
            w.writerows((tau, h0, repr(float(s)), repr(pw)) for s, pw in zip(grid, power))
            best = grid[int(np.argmax(power))]
            print(f"tau={tau} h0={h0}: argmax s={best:.4f}, max power {max(power):.4f}", file=sys.stderr)
    if args.out:
        fh.close()


if __name__ == "__main__":
    main()
