"""Command-line entry point.

Exit codes: 0 success, 2 bad input or parameters, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .errors import ContractError, DomainError, EvaluationError, InputError, NumericalError
from .harness import ExperimentConfig, json_safe, run_replications, summarize, write_results
from .mplaw import density, mp_law
from .pipeline import LAYOUTS, ingest_matrix, log_returns, read_sectors, group_sample
from .rng import stream
from .spectrum import DiscreteSpectrum
from .sphericity import TestConfig, run_test, s_bar, tlr_power

log = logging.getLogger("ellipspec")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3
METHODS = ("t1", "t2", "tm", "tlr", "tlr-tilde")


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _write(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = ExperimentConfig.from_json(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    result = run_replications(cfg, workers=args.workers)
    summary = summarize(result, cfg)
    if args.out:
        write_results(result, summary, args.out)
    else:
        sys.stdout.write(json.dumps(json_safe(summary), indent=2, sort_keys=True, allow_nan=False) + "\n")
    return EXIT_OK


def _test_options(args: argparse.Namespace) -> dict[str, Any]:
    opts: dict[str, Any] = {"method": "tm", "alpha": 0.05, "s": None, "tau": None, "seed": 0}
    if args.config:
        try:
            opts.update(json.loads(Path(args.config).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config {args.config}: {exc}") from None
    for key in opts:
        val = getattr(args, key, None)
        if val is not None:
            opts[key] = val
    if opts["method"] not in METHODS:
        raise InputError(f"unknown method {opts['method']!r}; choose from {METHODS}")
    return opts


def cmd_test(args: argparse.Namespace) -> int:
    opts = _test_options(args)
    matrix = ingest_matrix(args.input, args.layout, args.kind)
    if args.kind == "prices":
        matrix = log_returns(matrix)
    tcfg = TestConfig(alpha=float(opts["alpha"]), s=opts["s"], tau=opts["tau"], seed=int(opts["seed"]))
    prov = {**matrix.provenance, "assets_used": len(matrix.assets)}

    if args.sectors is None:
        report = run_test(opts["method"], data=matrix.values, config=tcfg)
        report.meta["provenance"] = prov
        _write(report.to_json(indent=2, sort_keys=True) + "\n", args.out)
        return EXIT_OK

    sectors = read_sectors(args.sectors)
    known = set(matrix.assets)
    sectors = {k: [a for a in v if a in known] for k, v in sectors.items()}
    groups = group_sample(sectors, args.groups, stream(int(opts["seed"]), "groups"))
    reports = [run_test(opts["method"], data=matrix.select(g).values, config=tcfg).to_dict() for g in groups]
    pvals = np.array([r["p_value"] for r in reports])
    out = {
        "method": opts["method"],
        "groups": [list(g) for g in groups],
        "reports": reports,
        "summary": {
            "count": len(reports),
            "rejections": int(np.sum(pvals < tcfg.alpha)),
            "max_p_value": float(pvals.max()),
            "above_alpha": int(np.sum(pvals >= tcfg.alpha)),
        },
        "provenance": prov,
    }
    _write(json.dumps(out, indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def cmd_mp_law(args: argparse.Namespace) -> int:
    H = DiscreteSpectrum.point() if args.atoms is None else DiscreteSpectrum(tuple(args.atoms), tuple(args.weights or ()))
    law = mp_law(args.c, H)
    lo, hi = law.support[0][0], law.support[-1][1]
    pad = 0.05 * (hi - lo)
    x = np.linspace(max(0.0, lo - pad), hi + pad, args.points)
    # include the edges themselves so the support is visible in the grid
    x = np.unique(np.concatenate([x, np.ravel(law.support)]))
    f = density(law, x)
    lines = ["x,density"] + [f"{a!r},{b!r}" for a, b in zip(x.tolist(), f.tolist())]
    _write("\n".join(lines) + "\n", args.out)
    edges = {"c": law.c, "support": [list(iv) for iv in law.support], "zero_mass": law.zero_mass}
    if args.edges_out:
        _write(json.dumps(edges, indent=2) + "\n", args.edges_out)
    else:
        sys.stderr.write(json.dumps(edges) + "\n")
    return EXIT_OK


def cmd_power(args: argparse.Namespace) -> int:
    if args.s_grid is not None:
        grid = args.s_grid
    else:
        top = s_bar(args.c, args.h0)
        grid = np.linspace(0.0, top, args.points + 2)[1:-1].tolist()
    lines = ["s,power"]
    for s in grid:
        lines.append(f"{s!r},{tlr_power(args.c, s, args.h0, args.tau, args.alpha)!r}")
    _write("\n".join(lines) + "\n", args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ellipspec", description="Spectral statistics and sphericity tests for elliptical data.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a Monte Carlo experiment from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="output directory for replications.csv and summary.json")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("test", help="run a sphericity test on a price or return file")
    p.add_argument("input")
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--alpha", type=float)
    p.add_argument("--s", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--config", help="JSON with defaults for method/alpha/s/tau/seed")
    p.add_argument("--layout", choices=LAYOUTS, default="dates-as-rows")
    p.add_argument("--kind", choices=("prices", "returns"), default="prices")
    p.add_argument("--sectors", help="CSV of asset,sector; tests random one-per-sector groups")
    p.add_argument("--groups", type=int, default=100)
    p.add_argument("--out")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("mp-law", help="density and support of the limiting spectral law")
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--atoms", type=_floats)
    p.add_argument("--weights", type=_floats)
    p.add_argument("--points", type=int, default=400)
    p.add_argument("--out")
    p.add_argument("--edges-out")
    p.set_defaults(func=cmd_mp_law)

    p = sub.add_parser("power", help="asymptotic power of the known-scale log-LSS test over s")
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--h0", type=float, required=True)
    p.add_argument("--tau", type=float, default=2.0)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--s-grid", type=_floats)
    p.add_argument("--points", type=int, default=50)
    p.add_argument("--out")
    p.set_defaults(func=cmd_power)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InputError, DomainError, ContractError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except (NumericalError, EvaluationError) as exc:
        log.error("%s", exc)
        return EXIT_NUMERIC
    except MemoryError as exc:
        log.error("out of memory: %s", exc)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
