"""Sphericity tests for elliptical data.

John-type tests ``T1``, ``T2`` and their maximum ``Tm`` work on spatial-sign
data and need no moment assumption on the radius.  ``T_LR`` is the log-LSS test
against a rank-one spike; ``T_LR~`` is its known-scale (sigma = 1) version on
the raw sample covariance, whose null and alternative laws depend on ``tau``.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import DomainError
from .mplaw import log_integral
from .quadrature import adaptive_gauss_legendre
from .spectral import SpectralSample, alpha_estimators, lss, sample_spectrum, spatial_sign

__all__ = [
    "TestReport",
    "TestConfig",
    "t1_t2",
    "null_params_t1t2",
    "tm_statistic",
    "tm_rho",
    "bvn_orthant_cdf",
    "tm_pvalue",
    "tlr_z",
    "s_bar",
    "tlr_statistic",
    "tlr_null_params",
    "tlr_tilde_params",
    "tlr_power",
    "run_test",
    "TEST_NAMES",
]

_S_MARGIN = 1e-8


# ---------------------------------------------------------------------------
# John-type tests
# ---------------------------------------------------------------------------


def t1_t2(alpha2_hat: float, alpha4_hat: float) -> tuple[float, float]:
    return alpha2_hat - 1.0, alpha4_hat - 1.0


def null_params_t1t2(c: float) -> tuple[np.ndarray, np.ndarray]:
    """Null mean and covariance of ``n (T1, T2)``."""
    if not c > 0:
        raise DomainError("c must be positive")
    mu = np.array([-1.0, -6.0 + c])
    omega = np.array([[4.0, 24.0], [24.0, 8.0 * (18.0 + 12.0 * c + c * c)]])
    return mu, omega


def tm_statistic(t1: float, t2: float, n: int, c_n: float) -> float:
    return max((n * t1 + 1.0) / 2.0, (n * t2 + 6.0 - c_n) / math.sqrt(8.0 * (18.0 + 12.0 * c_n + c_n**2)))


def tm_rho(c: float) -> float:
    return 6.0 / math.sqrt(2.0 * (18.0 + 12.0 * c + c * c))


def bvn_orthant_cdf(x: float, rho: float) -> float:
    """``P(U <= x, V <= x)`` for standard normals with correlation ``rho``.

    Integrates ``phi(u) Phi((x - rho u) / sqrt(1 - rho^2))`` over ``u <= x``.
    """
    if not -1.0 < rho < 1.0:
        raise DomainError(f"need |rho| < 1, got {rho!r}")
    if x <= -38.0:
        return 0.0
    if x >= 38.0:
        return 1.0
    r = math.sqrt(1.0 - rho * rho)

    def f(u):
        return np.exp(-0.5 * u * u) / math.sqrt(2.0 * math.pi) * ndtr((x - rho * u) / r)

    # the inner cdf switches sharply near u = x / rho when |rho| -> 1
    cuts = sorted({-38.0, x, *([x / rho] if rho != 0 and -38.0 < x / rho < x else [])})
    total = sum(adaptive_gauss_legendre(f, a, b, tol=1e-14) for a, b in zip(cuts[:-1], cuts[1:]))
    return min(1.0, max(0.0, total))


def tm_pvalue(tm: float, c: float) -> float:
    """Upper tail ``P(max(U, V) > tm)`` with ``rho = tm_rho(c)``.

    Written as ``2 Phi(-tm) - P(U <= -tm, V <= -tm)`` so small p-values keep
    their relative accuracy.
    """
    rho = tm_rho(c)
    p = 2.0 * float(ndtr(-tm)) - bvn_orthant_cdf(-tm, rho)
    return min(1.0, max(0.0, p))


# ---------------------------------------------------------------------------
# Log-LSS tests against a spike
# ---------------------------------------------------------------------------


def tlr_z(s: float, c: float) -> float:
    return (1.0 + s) * (c + s) / s


def s_bar(c: float, h: float = 0.0) -> float:
    """Largest admissible testing parameter for spike strength ``h``."""
    return math.sqrt(c) if h <= math.sqrt(c) else c / h


def _check_s(c: float, s: float, h: float = 0.0) -> None:
    if not c > 0:
        raise DomainError("c must be positive")
    top = s_bar(c, h)
    if not 0.0 < s < top - _S_MARGIN:
        raise DomainError(f"s={s!r} must lie in (0, {top!r})")


def tlr_statistic(sample: SpectralSample, s: float) -> float:
    """``int ln(z(s) - x) dF^{B}(x) - int ln(z(s) - x) dF^{c_n, delta_1}(x)``.

    Multiply by ``p`` for the quantity with an O(1) limit.
    """
    c = sample.c_n
    _check_s(c, s)
    z = tlr_z(s, c)
    top = float(sample.eigenvalues[-1])
    if not z > top:
        raise DomainError(f"z(s)={z!r} does not exceed the largest eigenvalue {top!r}; test undefined")
    return lss(sample, lambda x: np.log(z - x)) - log_integral(c, z)


def tlr_null_params(c: float, s: float) -> tuple[float, float]:
    """Null mean and variance of ``p T_LR(s)``."""
    _check_s(c, s)
    r = s * s / c
    mu = 0.5 * math.log1p(-r) + r
    sigma2 = -2.0 * math.log1p(-r) - 2.0 * r
    return mu, sigma2


def tlr_tilde_params(c: float, s: float, h: float, tau: float) -> tuple[float, float]:
    """Mean and variance of ``p T_LR~(s)`` when the true spike is ``h``."""
    if h < 0:
        raise DomainError("h must be nonnegative")
    _check_s(c, s, h)
    if not s * h / c < 1.0:
        raise DomainError("need s h / c < 1")
    r = s * s / c
    mu = 0.5 * math.log1p(-r) + (1.0 - tau / 2.0) * r + math.log1p(-s * h / c)
    sigma2 = -2.0 * math.log1p(-r) - (2.0 - tau) * r
    if not sigma2 > 0:
        raise DomainError(f"variance {sigma2!r} is not positive at (c={c}, s={s}, tau={tau})")
    return mu, sigma2


def tlr_power(c: float, s: float, h0: float, tau: float, alpha: float) -> float:
    """Asymptotic rejection probability of the lower-tail ``T_LR~(s)`` test at spike ``h0``."""
    if not 0.0 < alpha < 1.0:
        raise DomainError("alpha must lie in (0, 1)")
    if not h0 > 0:
        raise DomainError("h0 must be positive")
    mu_alt, _ = tlr_tilde_params(c, s, h0, tau)
    mu_null, sigma2 = tlr_tilde_params(c, s, 0.0, tau)
    return float(ndtr(ndtri(alpha) - (mu_alt - mu_null) / math.sqrt(sigma2)))


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


@dataclass
class TestReport:
    test: str
    statistic: float
    null: dict[str, Any]
    p_value: float
    alpha: float
    reject: bool
    meta: dict[str, Any] = field(default_factory=dict)

    __test__ = False  # not a pytest class

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_value <= 1.0:
            raise DomainError(f"p-value {self.p_value!r} outside [0, 1]")

    def to_dict(self) -> dict[str, Any]:
        return {
            "test": self.test,
            "statistic": self.statistic,
            "null": self.null,
            "p_value": self.p_value,
            "alpha": self.alpha,
            "reject": self.reject,
            "meta": self.meta,
        }

    def to_json(self, **kwargs: Any) -> str:
        return json.dumps(self.to_dict(), **kwargs)


@dataclass(frozen=True)
class TestConfig:
    alpha: float = 0.05
    s: float | None = None
    tau: float | None = None
    seed: int | None = None

    __test__ = False

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise DomainError("alpha must lie in (0, 1)")


TEST_NAMES = ("T1", "T2", "Tm", "TLR", "TLR_tilde")
_ALIASES = {
    "t1": "T1",
    "t2": "T2",
    "tm": "Tm",
    "tlr": "TLR",
    "tlr_tilde": "TLR_tilde",
    "tlr-tilde": "TLR_tilde",
}


def _canonical(name: str) -> str:
    key = name.strip().lower()
    if key not in _ALIASES:
        raise DomainError(f"unknown test {name!r}; choose from {TEST_NAMES}")
    return _ALIASES[key]


def _digest(arr: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(arr, dtype=np.float64).tobytes()).hexdigest()[:16]


def run_test(
    name: str,
    data: np.ndarray | None = None,
    spectrum: SpectralSample | None = None,
    config: TestConfig | None = None,
) -> TestReport:
    """Run one test on a ``p x n`` data matrix or on a precomputed spectrum.

    A spectrum passed directly is taken as already spatial-signed for T1, T2,
    Tm and TLR, and as the raw sample covariance for TLR_tilde.
    """
    cfg = config or TestConfig()
    test = _canonical(name)
    if (data is None) == (spectrum is None):
        raise DomainError("pass exactly one of data or spectrum")
    if data is not None:
        data = np.asarray(data, dtype=np.float64)
        digest = _digest(data)
        spectrum = sample_spectrum(data if test == "TLR_tilde" else spatial_sign(data))
    else:
        digest = _digest(spectrum.eigenvalues)
    p, n, c = spectrum.p, spectrum.n, spectrum.c_n
    meta: dict[str, Any] = {"p": p, "n": n, "c_n": c, "s": cfg.s, "tau": cfg.tau, "seed": cfg.seed, "digest": digest}

    if test in ("T1", "T2", "Tm"):
        a2, a4 = alpha_estimators(spectrum)
        t1, t2 = t1_t2(a2, a4)
        mu, omega = null_params_t1t2(c)
        if test == "T1":
            stat, scaled = t1, n * t1
            pval = float(ndtr(-(scaled - mu[0]) / math.sqrt(omega[0, 0])))
            null = {"scaled_statistic": scaled, "mean": mu[0], "variance": omega[0, 0], "tail": "upper"}
        elif test == "T2":
            stat, scaled = t2, n * t2
            pval = float(ndtr(-(scaled - mu[1]) / math.sqrt(omega[1, 1])))
            null = {"scaled_statistic": scaled, "mean": mu[1], "variance": omega[1, 1], "tail": "upper"}
        else:
            stat = tm_statistic(t1, t2, n, c)
            pval = tm_pvalue(stat, c)
            null = {"rho": tm_rho(c), "T1": t1, "T2": t2, "tail": "upper"}
    else:
        if cfg.s is None:
            raise DomainError(f"{test} needs the testing parameter s")
        stat = tlr_statistic(spectrum, cfg.s)
        if test == "TLR":
            mu, sigma2 = tlr_null_params(c, cfg.s)
        else:
            if cfg.tau is None:
                raise DomainError("TLR_tilde needs tau")
            mu, sigma2 = tlr_tilde_params(c, cfg.s, 0.0, cfg.tau)
        scaled = p * stat
        pval = float(ndtr((scaled - mu) / math.sqrt(sigma2)))
        null = {"scaled_statistic": scaled, "mean": mu, "variance": sigma2, "tail": "lower"}
    pval = min(1.0, max(0.0, pval))
    return TestReport(test, float(stat), null, pval, cfg.alpha, pval < cfg.alpha, meta)
