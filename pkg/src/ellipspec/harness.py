"""Seeded Monte Carlo experiments.

Replication ``i`` draws from ``stream(seed, "replication", i)``, so results do
not depend on how replications are spread over workers.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np
from scipy import stats
from scipy.special import ndtri

from .clt import MomentCltParams, centering_values, moment_clt_params
from .errors import DomainError, InputError
from .rng import stream
from .sampler import EllipticalModel, Normal, RadiusLaw, Spike, radius_law_from_dict, sample_direction, sample_population
from .spectral import alpha_from_moments, gram_moments, sample_spectrum, spatial_sign
from .spectrum import DiscreteSpectrum
from .sphericity import TestReport, t1_t2, tlr_null_params, tlr_statistic, tlr_tilde_params, tlr_z, tm_pvalue, tm_statistic

__all__ = [
    "ExperimentConfig",
    "ReplicationResult",
    "run_replications",
    "replicate",
    "qq_data",
    "qq_correlation",
    "empirical_size_power",
    "spiked_model",
    "summarize",
    "write_results",
    "STATISTICS",
]

log = logging.getLogger(__name__)

STATISTICS = ("moments", "t1t2", "tm", "tlr", "tlr_tilde")
# tau assumed when standardising moments under a radius with no tau
_REFERENCE_TAU = 2.0


@dataclass(frozen=True)
class ExperimentConfig:
    model: EllipticalModel
    n: int
    replications: int = 2000
    seed: int = 0
    statistics: tuple[str, ...] = ("moments",)
    alpha: float = 0.05
    s_grid: tuple[float, ...] = ()
    tau: float | None = None
    workers: int = 1

    def __post_init__(self) -> None:
        if self.replications < 1:
            raise DomainError("need at least one replication")
        if self.n < 1:
            raise DomainError("n must be positive")
        bad = set(self.statistics) - set(STATISTICS)
        if bad:
            raise DomainError(f"unknown statistics {sorted(bad)}; choose from {STATISTICS}")
        if {"tlr", "tlr_tilde"} & set(self.statistics) and not self.s_grid:
            raise DomainError("tlr statistics need a nonempty s_grid")

    @property
    def c_n(self) -> float:
        return self.model.p / self.n

    @property
    def conforming(self) -> bool:
        return self.model.radius.conforming

    @property
    def clt_tau(self) -> float:
        """tau used for moment standardisation and the tilde test."""
        if self.tau is not None:
            return float(self.tau)
        return self.model.tau if self.conforming else _REFERENCE_TAU

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> ExperimentConfig:
        try:
            m = d["model"]
            p = int(m["p"])
            radius = radius_law_from_dict(m.get("radius", {"kind": "normal"}))
            spectrum = DiscreteSpectrum.from_dict(m["spectrum"]) if "spectrum" in m else DiscreteSpectrum.point()
            seed = int(d.get("seed", 0))
            if "spike" in d:
                sp = d["spike"]
                model = spiked_model(p, float(sp["h"]), sp.get("v", "fixed"), stream(seed, "spike-direction"), radius)
            else:
                model = EllipticalModel(p, radius, spectrum)
            return cls(
                model=model,
                n=int(d["n"]),
                replications=int(d.get("replications", 2000)),
                seed=seed,
                statistics=tuple(d.get("statistics", ("moments",))),
                alpha=float(d.get("alpha", 0.05)),
                s_grid=tuple(float(s) for s in d.get("s_grid", ())),
                tau=None if d.get("tau") is None else float(d["tau"]),
                workers=int(d.get("workers", 1)),
            )
        except KeyError as exc:
            raise InputError(f"experiment config is missing {exc}") from None

    @classmethod
    def from_json(cls, path: str | Path) -> ExperimentConfig:
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config {path}: {exc}") from None


@dataclass
class ReplicationResult:
    columns: list[str]
    values: np.ndarray
    meta: dict[str, Any] = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.columns.index(name)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["replication", *self.columns])
        for i, row in enumerate(self.values):
            w.writerow([i, *(repr(float(v)) for v in row)])
        return buf.getvalue()


def spiked_model(
    p: int, h: float, v_mode: str = "fixed", rng: np.random.Generator | None = None, radius: RadiusLaw | None = None
) -> EllipticalModel:
    """Model with ``Sigma = I + h v v'`` and ``v = e_1`` or uniformly random."""
    if h < 0:
        raise DomainError("spike strength h must be nonnegative")
    radius = radius or Normal()
    if h == 0:
        return EllipticalModel(p, radius, DiscreteSpectrum.point())
    if v_mode == "fixed":
        v = np.zeros(p)
        v[0] = 1.0
    elif v_mode == "random":
        if rng is None:
            raise DomainError("random spike direction needs an rng")
        v = sample_direction(p, rng)
    else:
        raise DomainError(f"unknown spike direction mode {v_mode!r}")
    spectrum = DiscreteSpectrum((1.0, 1.0 + h), ((p - 1) / p, 1.0 / p))
    return EllipticalModel(p, radius, spectrum, Spike(h, v))


def _columns(cfg: ExperimentConfig) -> list[str]:
    cols: list[str] = []
    for name in cfg.statistics:
        if name == "moments":
            cols += ["beta1", "beta2", "z1", "z2"]
        elif name == "t1t2":
            cols += ["nT1", "nT2"]
        elif name == "tm":
            cols += ["Tm", "Tm_pvalue"]
        elif name == "tlr":
            cols += [f"pTLR[s={s:g}]" for s in cfg.s_grid]
        elif name == "tlr_tilde":
            cols += [f"pTLRt[s={s:g}]" for s in cfg.s_grid]
    return cols


@dataclass(frozen=True)
class _Prepared:
    cfg: ExperimentConfig
    params: MomentCltParams | None
    centering: tuple[float, float] | None


def _prepare(cfg: ExperimentConfig) -> _Prepared:
    if "moments" in cfg.statistics:
        params = moment_clt_params(cfg.c_n, cfg.model.spectrum, cfg.clt_tau)
        return _Prepared(cfg, params, centering_values(cfg.c_n, cfg.model.spectrum))
    return _Prepared(cfg, None, None)


def _scaled_tlr(spec, s: float) -> float:
    # z(s) below the top eigenvalue leaves the statistic undefined; in a Monte
    # Carlo run that replication is recorded as nan and counted, not fatal
    try:
        return spec.p * tlr_statistic(spec, s)
    except DomainError:
        if spec.eigenvalues[-1] < tlr_z(s, spec.c_n):
            raise
        return math.nan


def _replicate(prep: _Prepared, i: int) -> np.ndarray:
    cfg = prep.cfg
    p, n, c = cfg.model.p, cfg.n, cfg.c_n
    x = sample_population(cfg.model, n, stream(cfg.seed, "replication", i))
    row: list[float] = []
    signed = None
    for name in cfg.statistics:
        if name == "moments":
            b1, b2 = gram_moments(x, 2)
            par, (m1, m2) = prep.params, prep.centering
            # a degenerate limit (psi = 0) has no standardised score
            z1 = (p * (b1 - m1) - par.v1) / math.sqrt(par.psi11) if par.psi11 > 0 else math.nan
            z2 = (p * (b2 - m2) - par.v2) / math.sqrt(par.psi22) if par.psi22 > 0 else math.nan
            row += [b1, b2, z1, z2]
        elif name in ("t1t2", "tm"):
            if signed is None:
                signed = spatial_sign(x)
            _, b2, b3, b4 = gram_moments(signed, 4)
            t1, t2 = t1_t2(*alpha_from_moments(b2, b3, b4, c))
            if name == "t1t2":
                row += [n * t1, n * t2]
            else:
                tm = tm_statistic(t1, t2, n, c)
                row += [tm, tm_pvalue(tm, c)]
        elif name == "tlr":
            if signed is None:
                signed = spatial_sign(x)
            spec = sample_spectrum(signed)
            row += [_scaled_tlr(spec, s) for s in cfg.s_grid]
        elif name == "tlr_tilde":
            spec = sample_spectrum(x)
            row += [_scaled_tlr(spec, s) for s in cfg.s_grid]
    return np.asarray(row, dtype=np.float64)


def replicate(cfg: ExperimentConfig, i: int) -> np.ndarray:
    """One replication's statistic row, exactly as ``run_replications`` computes it."""
    return _replicate(_prepare(cfg), i)


def _run_chunk(prep: _Prepared, indices: Sequence[int]) -> np.ndarray:
    return np.vstack([_replicate(prep, i) for i in indices])


def run_replications(cfg: ExperimentConfig, workers: int | None = None) -> ReplicationResult:
    workers = cfg.workers if workers is None else workers
    prep = _prepare(cfg)
    idx = np.arange(cfg.replications)
    if workers <= 1:
        values = _run_chunk(prep, idx)
    else:
        chunks = [c for c in np.array_split(idx, workers * 4) if c.size]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            values = np.vstack(list(pool.map(_run_chunk, [prep] * len(chunks), chunks)))
    meta: dict[str, Any] = {
        "p": cfg.model.p,
        "n": cfg.n,
        "c_n": cfg.c_n,
        "replications": cfg.replications,
        "seed": cfg.seed,
        "radius": cfg.model.radius.to_dict(),
        "conforming": cfg.conforming,
        "tau": cfg.clt_tau,
    }
    if prep.params is not None:
        meta["clt_params"] = prep.params.to_dict()
        meta["centering"] = list(prep.centering)
    return ReplicationResult(_columns(cfg), values, meta)


def qq_data(values: Iterable[float]) -> tuple[np.ndarray, np.ndarray]:
    """Normal quantiles at plotting positions ``(i - 0.5)/R`` against sorted values."""
    v = np.sort(np.asarray(list(values), dtype=np.float64))
    if v.size < 10:
        raise DomainError("QQ data needs at least 10 values")
    pos = (np.arange(1, v.size + 1) - 0.5) / v.size
    return ndtri(pos), v


def qq_correlation(values: Iterable[float]) -> float:
    theo, emp = qq_data(values)
    if np.ptp(emp) == 0.0:
        return float("nan")
    return float(np.corrcoef(theo, emp)[0, 1])


def empirical_size_power(reports: Sequence[TestReport | bool], alpha: float | None = None) -> tuple[float, float]:
    """Rejection frequency and its binomial standard error."""
    if len(reports) == 0:
        raise DomainError("no reports")
    rejected = []
    for r in reports:
        if isinstance(r, TestReport):
            rejected.append(r.p_value < alpha if alpha is not None else r.reject)
        else:
            rejected.append(bool(r))
    f = float(np.mean(rejected))
    return f, math.sqrt(f * (1.0 - f) / len(rejected))


def summarize(result: ReplicationResult, cfg: ExperimentConfig) -> dict[str, Any]:
    """Per-column mean/variance/QQ correlation plus size or conformance checks."""
    out: dict[str, Any] = {"meta": result.meta, "columns": {}}
    for name in result.columns:
        v = result.column(name)
        finite = np.isfinite(v)
        v = v[finite]
        entry: dict[str, Any] = {"undefined": int((~finite).sum())}
        if v.size < 2:
            out["columns"][name] = entry
            continue
        entry.update(mean=float(np.mean(v)), variance=float(np.var(v, ddof=1)))
        if v.size >= 10:
            entry["qq_correlation"] = qq_correlation(v)
        if name in ("z1", "z2"):
            entry["ks_pvalue"] = float(stats.kstest(v, "norm").pvalue)
        if name.endswith("pvalue"):
            entry["rejection_rate"], entry["rejection_se"] = empirical_size_power(list(v < cfg.alpha))
            entry["uniformity_ks_pvalue"] = float(stats.kstest(v, "uniform").pvalue)
        if name.startswith("pTLR"):
            s_val = float(name.split("=")[1].rstrip("]"))
            if name.startswith("pTLRt"):
                mu, var = tlr_tilde_params(cfg.c_n, s_val, 0.0, cfg.clt_tau)
            else:
                mu, var = tlr_null_params(cfg.c_n, s_val)
            entry.update(null_mean=mu, null_variance=var)
            entry["ks_pvalue"] = float(stats.kstest(v, "norm", args=(mu, math.sqrt(var))).pvalue)
        out["columns"][name] = entry
    flags = []
    if not cfg.conforming:
        flags.append(f"radius {cfg.model.radius.kind!r} violates the fourth-moment condition; no CLT applies")
    for z in ("z1", "z2"):
        if z in result.columns and out["columns"][z]["variance"] > 1.5:
            flags.append(f"{z} variance {out['columns'][z]['variance']:.3g} far from 1")
    out["non_conforming"] = bool(flags)
    out["flags"] = flags
    for f in flags:
        log.warning(f)
    return out


def json_safe(obj: Any) -> Any:
    # nan/inf are not JSON; write them as null
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_safe(v) for v in obj]
    return obj


def write_results(result: ReplicationResult, summary: dict[str, Any], out_dir: str | Path) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    values_path = out / "replications.csv"
    summary_path = out / "summary.json"
    values_path.write_text(result.to_csv())
    summary_path.write_text(json.dumps(json_safe(summary), indent=2, sort_keys=True, allow_nan=False) + "\n")
    return values_path, summary_path


