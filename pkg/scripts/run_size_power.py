"""Null size and spiked power of the John-type and log-LSS tests.

    python scripts/run_size_power.py --out results/size_power
"""

import argparse
import logging
from dataclasses import replace
from pathlib import Path

from ellipspec.harness import ExperimentConfig, run_replications, summarize, write_results

HERE = Path(__file__).parent


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/size_power")
    ap.add_argument("--replications", type=int)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")

    for name in ("null_gaussian.json", "spiked_gaussian.json"):
        cfg = ExperimentConfig.from_json(HERE / "configs" / name)
        if args.replications:
            cfg = replace(cfg, replications=args.replications)
        result = run_replications(cfg, workers=args.workers)
        summary = summarize(result, cfg)
        write_results(result, summary, Path(args.out) / name.removesuffix(".json"))
        print(f"== {name} (p={cfg.model.p}, n={cfg.n}, R={cfg.replications})")
        for col, entry in summary["columns"].items():
            if "rejection_rate" in entry:
                print(f"  {col:16s} rejection rate {entry['rejection_rate']:.4f} (se {entry['rejection_se']:.4f})")
            elif "null_mean" in entry:
                print(
                    f"  {col:16s} mean {entry['mean']:.4f} (null {entry['null_mean']:.4f})"
                    f" var {entry['variance']:.4f} (null {entry['null_variance']:.4f})"
                    f" KS p {entry['ks_pvalue']:.3g} undefined {entry['undefined']}"
                )


if __name__ == "__main__":
    main()
