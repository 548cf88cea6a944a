"""End-to-end acceptance criteria; each test prints one PASS/FAIL line.

Criteria 1-4 go through the command line front end (``simulate`` and
``test``) on configs and synthetic price files with known ground truth.
"""

import json
import math

import numpy as np
import pytest
from scipy import stats

from ellipspec.cli import main
from ellipspec.clt import moment_clt_params
from ellipspec.harness import ExperimentConfig, run_replications, summarize
from ellipspec.mplaw import mp_edges, stieltjes, support_edges
from ellipspec.pipeline import ReturnsMatrix
from ellipspec.rng import stream
from ellipspec.sampler import (
    Deterministic,
    EllipticalModel,
    Normal,
    StudentT,
    quadratic_form_cov_oracle,
    radius_moments,
    sample_population,
)
from ellipspec.spectrum import DiscreteSpectrum
from ellipspec.sphericity import s_bar, tlr_null_params, tlr_power

pytestmark = pytest.mark.slow

R = 2000
SEED = 20240101
TWO_HALF = {"atoms": [1.0, 2.0], "weights": [0.5, 0.5]}


def fmt(x):
    return f"{x:.4g}"


def write_prices(path, x):
    """Price file whose log returns are ``0.01 x``, plus one asset with a zero price."""
    p, n = x.shape
    logp = np.cumsum(np.hstack([np.zeros((p, 1)), 0.01 * x]), axis=1)
    prices = np.vstack([50.0 * np.exp(logp), np.r_[0.0, np.ones(n)]])
    assets = tuple(f"A{i:03d}" for i in range(p)) + ("ZERO",)
    ReturnsMatrix(assets, tuple(f"t{j}" for j in range(n + 1)), prices).to_csv(path)


def cli_reports(tmp, model, n, reps, seed, method="tm"):
    """Run ``ellipspec test`` on one synthetic price file per replication."""
    prices, out = tmp / "prices.csv", tmp / "report.json"
    reports = []
    for i in range(reps):
        write_prices(prices, sample_population(model, n, stream(seed, "replication", i)))
        assert main(["test", str(prices), "--method", method, "--alpha", "0.05", "--out", str(out)]) == 0
        reports.append(json.loads(out.read_text()))
    return reports


def simulate(tmp, name, cfg):
    path = tmp / f"{name}.json"
    path.write_text(json.dumps(cfg))
    out = tmp / name
    assert main(["simulate", "--config", str(path), "--out", str(out)]) == 0
    return json.loads((out / "summary.json").read_text())


# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "name,radius,p,n",
    [("double-exponential", {"kind": "double_exponential"}, 200, 400), ("pearson-ii", {"kind": "pearson_ii", "beta": 4.0}, 400, 200)],
)
def test_c1_moment_clt(tmp_path, report_criterion, name, radius, p, n):
    cfg = {"model": {"p": p, "radius": radius, "spectrum": TWO_HALF}, "n": n, "replications": R, "seed": SEED, "statistics": ["moments"]}
    cols = simulate(tmp_path, name, cfg)["columns"]
    checks = {}
    for z in ("z1", "z2"):
        c = cols[z]
        checks[f"{z} mean"] = (abs(c["mean"]) <= 0.1, fmt(c["mean"]))
        checks[f"{z} var"] = (abs(c["variance"] - 1) <= 0.15, fmt(c["variance"]))
        checks[f"{z} qq"] = (c["qq_correlation"] >= 0.995, fmt(c["qq_correlation"]))
    report_criterion(f"C1 moment CLT {name} (p,n)=({p},{n})", checks)


@pytest.fixture(scope="module")
def gaussian_null_reports(tmp_path_factory):
    return cli_reports(tmp_path_factory.mktemp("c2"), EllipticalModel(100, Normal()), 200, R, SEED)


def test_c2_t1_t2_null_moments(gaussian_null_reports, report_criterion):
    reps = gaussian_null_reports
    assert all(r["meta"]["provenance"]["dropped"] == 1 for r in reps)
    n, c_n = reps[0]["meta"]["n"], reps[0]["meta"]["c_n"]
    nt1 = np.array([n * r["null"]["T1"] for r in reps])
    nt2 = np.array([n * r["null"]["T2"] for r in reps])
    report_criterion(
        "C2 T1/T2 null moments",
        {
            "mean nT1": (abs(nt1.mean() + 1) <= 0.15, fmt(nt1.mean())),
            "var nT1": (abs(nt1.var(ddof=1) - 4) <= 0.5, fmt(nt1.var(ddof=1))),
            "mean nT2": (abs(nt2.mean() - (-6 + c_n)) <= 1.0, f"{fmt(nt2.mean())} vs {fmt(-6 + c_n)}"),
        },
    )


def test_c3_tm_size(gaussian_null_reports, report_criterion):
    pv = np.array([r["p_value"] for r in gaussian_null_reports])
    size = float(np.mean([r["reject"] for r in gaussian_null_reports]))
    ks = stats.kstest(pv, "uniform").pvalue
    report_criterion(
        "C3 Tm size",
        {"size": (0.03 <= size <= 0.07, fmt(size)), "KS uniform p": (ks > 0.01, fmt(ks))},
    )


def test_c4_tm_power(tmp_path, report_criterion):
    model = EllipticalModel(100, Normal(), DiscreteSpectrum((1.0, 2.0), (0.9, 0.1)))
    reps = cli_reports(tmp_path, model, 200, 500, SEED + 4)
    power = float(np.mean([r["reject"] for r in reps]))
    report_criterion("C4 Tm power", {"power": (power >= 0.95, fmt(power))})


def mp_closed_form(c, z):
    roots = np.roots([c * z, z - 1.0 + c, 1.0])
    return max(roots, key=lambda r: r.imag)


def test_c5_silverstein_solver(report_criterion):
    checks = {}
    delta = DiscreteSpectrum.point()
    for c in (0.25, 0.5, 1.0, 2.0):
        a, b = mp_edges(c)
        re = np.linspace(-0.5, b + 1.0, 50)
        z = np.concatenate([re + 1j * im for im in (1e-3, 1e-2, 1e-1, 1.0)])
        got = stieltjes(c, delta, z)
        err = max(abs(g - mp_closed_form(c, w)) for g, w in zip(got, z))
        edges = support_edges(c, delta)
        edge_err = max(abs(edges[0][0] - a), abs(edges[-1][1] - b))
        checks[f"c={c} stieltjes"] = (err <= 1e-8, f"{err:.2e}")
        checks[f"c={c} edges"] = (edge_err <= 1e-9, f"{edge_err:.2e}")
    report_criterion("C5 Silverstein solver vs closed form", checks)


def test_c6_clt_parameter_oracle(report_criterion):
    par = moment_clt_params(0.5, DiscreteSpectrum.point(), 2.0)
    got = (par.v1, par.v2, par.psi11, par.psi12, par.psi22)
    worst = 0.0
    rng = stream(SEED, "c6")
    for _ in range(200):
        c = float(rng.uniform(0.05, 4.0))
        k = int(rng.integers(1, 5))
        H = DiscreteSpectrum(tuple(np.sort(rng.uniform(0.2, 5.0, k))), tuple(rng.dirichlet(np.ones(k))))
        g1, g2, g3, g4 = (H.moment(j) for j in (1, 2, 3, 4))
        q = moment_clt_params(c, H, 2.0)
        want = (0.0, c * g2, 2 * c * g2, 4 * c * g3 + 4 * c * c * g1 * g2,
                8 * c * g4 + 4 * c * c * g2 * g2 + 16 * c * c * g1 * g3 + 8 * c**3 * g1 * g1 * g2)  # fmt: skip
        have = (q.v1, q.v2, q.psi11, q.psi12, q.psi22)
        worst = max(worst, max(abs(h - w) / max(1.0, abs(w)) for h, w in zip(have, want)))
    report_criterion(
        "C6 CLT parameter oracle",
        {"exact example": (got == (0.0, 0.5, 1.0, 3.0, 10.0), str(got)), "tau=2 sweep": (worst <= 1e-12, f"{worst:.1e}")},
    )


def test_c7_tlr_null_law(report_criterion):
    cfg = ExperimentConfig(
        model=EllipticalModel(100, Normal()), n=200, replications=R, seed=SEED, statistics=("tlr",), s_grid=(0.5,)
    )
    col = summarize(run_replications(cfg), cfg)["columns"]["pTLR[s=0.5]"]
    mu, var = tlr_null_params(cfg.c_n, 0.5)
    report_criterion(
        "C7 T_LR null law (p,n)=(100,200) s=0.5",
        {
            "mean": (abs(col["mean"] - mu) <= 0.02, f"{fmt(col['mean'])} vs {fmt(mu)}"),
            "var": (abs(col["variance"] / var - 1) <= 0.3, f"{fmt(col['variance'])} vs {fmt(var)}"),
            "KS p": (col["ks_pvalue"] > 0.01, fmt(col["ks_pvalue"])),
            "undefined": (True, str(col["undefined"])),
        },
    )


def test_c8_power_structure(report_criterion):
    checks = {}
    for c in (0.5, 1.0):
        for h0 in (0.2, 0.4):
            top = s_bar(c, h0)
            grid = np.linspace(0.0, top, 401)[1:-1]
            step = grid[1] - grid[0]
            best = grid[np.argmax([tlr_power(c, s, h0, 2.0, 0.05) for s in grid])]
            checks[f"c={c} h0={h0}"] = (abs(best - h0) <= step, f"argmax {best:.4f}")
    low = tlr_power(1.0, 0.01, 0.3, 0.0, 0.05)
    at_h0 = tlr_power(1.0, 0.3, 0.3, 0.0, 0.05)
    checks["tau=0 s=0.01 vs s=h0"] = (low > at_h0, f"{fmt(low)} > {fmt(at_h0)}")
    checks["tau=0 s=0.01 > 0.99"] = (low > 0.99, fmt(low))
    report_criterion("C8 T_LR power structure", checks)


def random_symmetric(p, rng):
    a = rng.standard_normal((p, p))
    a = a + a.T
    return a / np.linalg.norm(a, 2)


@pytest.mark.parametrize("law", [Normal(), Deterministic()], ids=["normal", "deterministic"])
def test_c9_quadratic_form_oracle(report_criterion, law):
    p, total, chunk = 50, 1_000_000, 100_000
    rng = stream(SEED, "c9", 0)
    c, ct = random_symmetric(p, rng), random_symmetric(p, rng)
    prod = []
    for k in range(total // chunk):
        r = stream(SEED, "c9-sample", k)
        x = sample_population(EllipticalModel(p, law), chunk, r)
        q1 = np.einsum("ij,ij->j", x, c @ x) - np.trace(c)
        q2 = np.einsum("ij,ij->j", x, ct @ x) - np.trace(ct)
        prod.append(q1 * q2)
    prod = np.concatenate(prod)
    est, se = prod.mean(), prod.std(ddof=1) / math.sqrt(prod.size)
    want = quadratic_form_cov_oracle(c, ct, radius_moments(law, p)[1], p)
    report_criterion(
        f"C9 quadratic form covariance ({law.kind})",
        {"within 3 SE": (abs(est - want) <= 3 * se, f"MC {fmt(est)} oracle {fmt(want)} SE {fmt(se)}")},
    )


def test_c10_student_t_negative_control(report_criterion):
    cfg = ExperimentConfig(model=EllipticalModel(200, StudentT(6.0)), n=400, replications=R, seed=SEED, statistics=("moments",))
    summary = summarize(run_replications(cfg), cfg)
    var = max(summary["columns"]["z1"]["variance"], summary["columns"]["z2"]["variance"])
    report_criterion(
        "C10 Student-t negative control",
        {"z variance > 1.5": (var > 1.5, fmt(var)), "flagged": (summary["non_conforming"], str(len(summary["flags"])) + " flags")},
    )
