import json
import math
import subprocess
import sys

import numpy as np
import pytest

from ellipspec.cli import main
from ellipspec.mplaw import mp_edges
from ellipspec.pipeline import ReturnsMatrix, ingest_prices, log_returns
from ellipspec.rng import stream
from ellipspec.sampler import EllipticalModel, Normal, sample_population
from ellipspec.sphericity import TestConfig, run_test, tlr_power


def price_file(path, x, scale=0.01):
    """Prices whose log returns are ``scale * x``."""
    p, n = x.shape
    logp = np.cumsum(np.hstack([np.zeros((p, 1)), scale * x]), axis=1)
    m = ReturnsMatrix(tuple(f"A{i}" for i in range(p)), tuple(f"t{j}" for j in range(n + 1)), 50.0 * np.exp(logp))
    m.to_csv(path)
    return path


@pytest.fixture
def prices(tmp_path):
    x = sample_population(EllipticalModel(40, Normal()), 80, stream(8, "cli"))
    return price_file(tmp_path / "prices.csv", x), x


@pytest.mark.parametrize("method", ["t1", "t2", "tm", "tlr"])
def test_test_subcommand_matches_library(tmp_path, prices, method):
    path, x = prices
    out = tmp_path / "r.json"
    assert main(["test", str(path), "--method", method, "--s", "0.3", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    returns = log_returns(ingest_prices(path)).values
    direct = run_test(method, data=returns, config=TestConfig(s=0.3, seed=0))
    assert report["p_value"] == direct.p_value and report["statistic"] == direct.statistic
    assert (report["meta"]["p"], report["meta"]["n"]) == (40, 80)
    assert report["meta"]["c_n"] == 0.5
    # the statistic is scale invariant, so the recovered returns give the same value as x
    assert report["statistic"] == pytest.approx(run_test(method, data=x, config=TestConfig(s=0.3)).statistic, rel=1e-9)


def test_test_reports_are_byte_identical(tmp_path, prices):
    path, _ = prices
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a, b):
        assert main(["test", str(path), "--method", "tm", "--seed", "3", "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_test_config_file(tmp_path, prices):
    path, _ = prices
    cfg = tmp_path / "t.json"
    cfg.write_text(json.dumps({"method": "tlr-tilde", "s": 0.2, "tau": 2.0, "alpha": 0.01}))
    out = tmp_path / "r.json"
    assert main(["test", str(path), "--config", str(cfg), "--out", str(out)]) == 0
    r = json.loads(out.read_text())
    assert r["test"] == "TLR_tilde" and r["alpha"] == 0.01 and r["meta"]["tau"] == 2.0


def test_group_mode(tmp_path, prices):
    path, _ = prices
    sectors = tmp_path / "sectors.csv"
    sectors.write_text("asset,sector\n" + "".join(f"A{i},S{i % 4}\n" for i in range(40)))
    out = tmp_path / "g.json"
    assert main(["test", str(path), "--method", "tm", "--sectors", str(sectors), "--groups", "6", "--out", str(out)]) == 0
    d = json.loads(out.read_text())
    assert d["summary"]["count"] == 6 and all(len(g) == 4 for g in d["groups"])
    assert all(r["meta"]["p"] == 4 for r in d["reports"])


def test_exit_codes(tmp_path, prices):
    path, _ = prices
    empty = tmp_path / "empty.csv"
    empty.write_text("date,A\n")
    assert main(["test", str(empty)]) == 2
    assert main(["test", str(tmp_path / "nope.csv")]) == 2
    assert main(["test", str(path), "--method", "tlr"]) == 2
    assert main(["test", str(path), "--method", "tlr", "--s", "0.9"]) == 2
    assert main(["power", "--c", "1", "--h0", "0.3", "--s-grid", "2.0"]) == 2
    with pytest.raises(SystemExit) as err:
        main(["test", str(path), "--method", "t9"])
    assert err.value.code == 2


def test_numerical_error_exit_code(tmp_path, monkeypatch):
    from ellipspec import cli
    from ellipspec.errors import NumericalError

    def boom(*args, **kwargs):
        raise NumericalError("did not converge", residual=1.0)

    monkeypatch.setattr(cli, "mp_law", boom)
    assert main(["mp-law", "--c", "0.5"]) == 3


def test_mp_law_subcommand(tmp_path):
    out, edges = tmp_path / "d.csv", tmp_path / "e.json"
    assert main(["mp-law", "--c", "0.5", "--atoms", "1,2", "--weights", "0.5,0.5", "--out", str(out), "--edges-out", str(edges)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "x,density" and len(lines) > 100
    xy = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    assert np.all(xy[:, 1] >= 0) and np.trapezoid(xy[:, 1], xy[:, 0]) == pytest.approx(1.0, abs=0.02)
    assert len(json.loads(edges.read_text())["support"]) == 1


def test_mp_law_default_delta(tmp_path, capsys):
    assert main(["mp-law", "--c", "0.25", "--points", "50"]) == 0
    captured = capsys.readouterr()
    support = json.loads(captured.err)["support"]
    assert support[0] == pytest.approx(list(mp_edges(0.25)), abs=1e-9)


def test_power_subcommand(tmp_path):
    out = tmp_path / "p.csv"
    assert main(["power", "--c", "1", "--h0", "0.3", "--tau", "2", "--points", "9", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "s,power" and len(lines) == 10
    s, pw = map(float, lines[1].split(","))
    assert pw == tlr_power(1.0, s, 0.3, 2.0, 0.05)


def test_simulate_subcommand(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"model": {"p": 10, "radius": {"kind": "normal"}}, "n": 20, "replications": 15, "seed": 2, "statistics": ["moments", "tm"]}))
    out = tmp_path / "sim"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["meta"]["replications"] == 15
    assert (out / "replications.csv").read_text().splitlines()[0].startswith("replication,beta1")
    assert main(["simulate", "--config", str(tmp_path / "missing.json")]) == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "ellipspec", "power", "--c", "0.5", "--h0", "0.2", "--points", "3"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("s,power")
