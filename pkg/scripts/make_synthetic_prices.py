"""Write a synthetic price file (and sector map) for trying the `test` subcommand.

    python scripts/make_synthetic_prices.py --p 40 --n 250 --out prices.csv --sectors sectors.csv
    ellipspec test prices.csv --method tm
"""

import argparse

import numpy as np

from ellipspec.pipeline import ReturnsMatrix
from ellipspec.rng import stream
from ellipspec.sampler import EllipticalModel, radius_law_from_dict, sample_population
from ellipspec.spectrum import DiscreteSpectrum


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", type=int, default=40)
    ap.add_argument("--n", type=int, default=250, help="number of returns; the file has n + 1 prices")
    ap.add_argument("--radius", default="normal")
    ap.add_argument("--spiked-share", type=float, default=0.0, help="fraction of variances doubled")
    ap.add_argument("--vol", type=float, default=0.01)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", required=True)
    ap.add_argument("--sectors", help="also write a random asset,sector map with this many sectors", nargs="?", const="sectors.csv")
    ap.add_argument("--n-sectors", type=int, default=5)
    args = ap.parse_args()

    share = args.spiked_share
    H = DiscreteSpectrum((1.0, 2.0), (1 - share, share)) if 0 < share < 1 else DiscreteSpectrum.point()
    model = EllipticalModel(args.p, radius_law_from_dict({"kind": args.radius}), H)
    x = sample_population(model, args.n, stream(args.seed, "prices"))
    logp = np.cumsum(np.hstack([np.zeros((args.p, 1)), args.vol * x]), axis=1)
    assets = tuple(f"A{i:03d}" for i in range(args.p))
    ReturnsMatrix(assets, tuple(f"t{j}" for j in range(args.n + 1)), 100.0 * np.exp(logp)).to_csv(args.out)
    if args.sectors:
        labels = stream(args.seed, "sectors").integers(0, args.n_sectors, args.p)
        with open(args.sectors, "w") as fh:
            fh.write("asset,sector\n")
            fh.writelines(f"{a},S{k}\n" for a, k in zip(assets, labels))


if __name__ == "__main__":
    main()
