"""Generalised Marchenko-Pastur law ``F^{c,H}`` for a discrete population spectrum.

The Stieltjes transform ``m(z)`` solves

    m = sum_i w_i / (t_i (1 - c - c z m) - z)

and is the unique solution whose companion ``-(1 - c)/z + c m`` lies in the
upper half plane.  Off the axis a damped fixed-point iteration converges from
``m = -1/z``; close to the axis it crawls, so stalled points are handed to
Newton's method with continuation in ``Im z``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, NumericalError
from .quadrature import adaptive_gauss_legendre
from .spectrum import DiscreteSpectrum

__all__ = [
    "MpLaw",
    "mp_law",
    "stieltjes",
    "companion_stieltjes",
    "silverstein_residual",
    "density",
    "support_edges",
    "lsd_moments",
    "log_integral",
    "integrate_density",
    "mp_edges",
]

_DAMPING = 0.5
_MAX_ITER = 10_000
_TOL = 1e-12
_EPS_PAIR = (1e-6, 5e-7)


def _check_c(c: float) -> float:
    c = float(c)
    if not (c > 0.0 and math.isfinite(c)):
        raise DomainError(f"dimension ratio c must be positive, got {c!r}")
    return c


def mp_edges(c: float) -> tuple[float, float]:
    """Support ``[(1 - sqrt c)^2, (1 + sqrt c)^2]`` of the standard MP law."""
    r = math.sqrt(_check_c(c))
    return (1.0 - r) ** 2, (1.0 + r) ** 2


# ---------------------------------------------------------------------------
# Stieltjes transform
# ---------------------------------------------------------------------------


def _rhs(m: np.ndarray, z: np.ndarray, c: float, t: np.ndarray, w: np.ndarray) -> np.ndarray:
    denom = t[None, :] * (1.0 - c - c * z[:, None] * m[:, None]) - z[:, None]
    return (w[None, :] / denom).sum(axis=1)


def _newton_step(m, z, c, t, w):
    denom = t[None, :] * (1.0 - c - c * z[:, None] * m[:, None]) - z[:, None]
    g = (w[None, :] / denom).sum(axis=1)
    dg = (w[None, :] * t[None, :] * c * z[:, None] / denom**2).sum(axis=1)
    return m - (m - g) / (1.0 - dg), np.abs(m - g)


def _admissible(m, z, c):
    return np.imag(-(1.0 - c) / z + c * m) > 0.0


def _fixed_point(z, c, t, w, m=None):
    m = -1.0 / z if m is None else m.copy()
    res = np.full(z.shape, np.inf)
    active = np.ones(z.shape, dtype=bool)
    stalled = np.zeros(z.shape, dtype=bool)
    checkpoint = res.copy()
    for k in range(1, _MAX_ITER + 1):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        g = _rhs(m[idx], z[idx], c, t, w)
        r = np.abs(g - m[idx])
        res[idx] = r
        m[idx] = (1.0 - _DAMPING) * m[idx] + _DAMPING * g
        active[idx[r <= _TOL]] = False
        if k % 100 == 0:
            slow = active & (res > 0.5 * checkpoint)
            stalled |= slow
            active &= ~slow
            checkpoint = res.copy()
    stalled |= active
    return m, res, stalled


def _continuation_newton(z, c, t, w):
    """Newton from a well-conditioned point ``Re z + i`` down to ``Im z``."""
    x, eta = z.real, z.imag
    top = np.maximum(eta, 1.0)
    m, _, _ = _fixed_point(x + 1j * top, c, t, w)
    steps = int(np.ceil(np.log2(np.max(top / eta)))) + 1
    for frac in np.linspace(0.0, 1.0, max(steps, 2))[1:]:
        zz = x + 1j * top * (eta / top) ** frac
        for _ in range(50):
            m_new, r = _newton_step(m, zz, c, t, w)
            m = m_new
            if np.all(r <= _TOL):
                break
    _, res = _newton_step(m, z, c, t, w)
    return m, res


def _poly_root(z: complex, c: float, t: np.ndarray, w: np.ndarray) -> complex:
    """Admissible root of the Silverstein equation as a polynomial in the companion transform."""
    P = np.polynomial.Polynomial
    prod = P([1.0])
    for ti in t:
        prod = prod * P([1.0, ti])
    s = P([0.0])
    for i, (ti, wi) in enumerate(zip(t, w)):
        others = P([1.0])
        for j, tj in enumerate(t):
            if j != i:
                others = others * P([1.0, tj])
        s = s + wi * ti * others
    mvar = P([0.0, 1.0])
    poly = z * mvar * prod + prod - c * mvar * s
    roots = poly.roots()
    good = roots[roots.imag > 0]
    if good.size == 0:
        raise NumericalError(f"no admissible root at z={z!r}")
    zz = np.full(good.shape, z)
    m = (good + (1.0 - c) / zz) / c
    _, res = _newton_step(m, zz, c, t, w)
    return complex(m[np.argmin(res)])


def stieltjes(c: float, H: DiscreteSpectrum, z) -> np.ndarray | complex:
    """Stieltjes transform of ``F^{c,H}`` at ``z`` (scalar or array, ``Im z > 0``)."""
    c = _check_c(c)
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=np.complex128)).ravel()
    if np.any(z.imag <= 0.0):
        raise DomainError("stieltjes needs Im z > 0")
    t, w = H.t, H.w
    m, res, stalled = _fixed_point(z, c, t, w)
    if stalled.any():
        m[stalled], res[stalled] = _continuation_newton(z[stalled], c, t, w)
    # polish everything with two Newton steps
    for _ in range(2):
        m_new, r = _newton_step(m, z, c, t, w)
        ok = np.isfinite(m_new)
        m[ok] = m_new[ok]
    _, res = _newton_step(m, z, c, t, w)
    wrong = ~_admissible(m, z, c) | ~(res <= _TOL * np.maximum(1.0, np.abs(m)))
    for i in np.flatnonzero(wrong):
        m[i] = _poly_root(complex(z[i]), c, t, w)
        res[i] = _newton_step(m[i : i + 1], z[i : i + 1], c, t, w)[1][0]
    worst = float(np.max(res))
    if not np.all(np.isfinite(m)) or worst > 1e-9:
        raise NumericalError(f"Stieltjes solver did not converge (residual {worst:.3g})", worst)
    return complex(m[0]) if scalar else m


def companion_stieltjes(c: float, H: DiscreteSpectrum, z) -> np.ndarray | complex:
    """Stieltjes transform of ``c F^{c,H} + (1 - c) delta_0``."""
    m = stieltjes(c, H, z)
    return -(1.0 - c) / np.asarray(z) + c * m if np.ndim(z) else -(1.0 - c) / z + c * m


def silverstein_residual(c: float, H: DiscreteSpectrum, z, mb) -> np.ndarray:
    """``|z - (-1/mb + c sum w t/(1 + t mb))|``."""
    z = np.asarray(z, dtype=np.complex128)
    mb = np.asarray(mb, dtype=np.complex128)
    rhs = -1.0 / mb + c * np.sum(H.w * H.t / (1.0 + np.multiply.outer(mb, H.t)), axis=-1)
    return np.abs(z - rhs)


# ---------------------------------------------------------------------------
# Support and density
# ---------------------------------------------------------------------------


def _z_of(m: float, c: float, t: np.ndarray, w: np.ndarray) -> float:
    return -1.0 / m + c * float(np.sum(w * t / (1.0 + t * m)))


def _dz(m, c, t, w):
    # sum_i w_i [(1 + t m)^2 - c t^2 m^2] / (m (1 + t m))^2, no cancellation at large |m|
    m = np.asarray(m, dtype=np.float64)
    tm = np.multiply.outer(m, t)
    num = 1.0 + 2.0 * tm + (1.0 - c) * tm**2
    return np.sum(w * num / (np.multiply.outer(m, np.ones_like(t)) * (1.0 + tm)) ** 2, axis=-1)


def _segment_grid(lo: float, hi: float, n: int = 4001) -> np.ndarray:
    s = np.linspace(-35.0, 35.0, n)
    if math.isinf(lo) and math.isinf(hi):
        raise ValueError("segment must have a finite end")
    if math.isinf(lo):
        return hi - np.exp(s[::-1])
    if math.isinf(hi):
        return lo + np.exp(s)
    u = 1.0 / (1.0 + np.exp(-s))
    return lo + (hi - lo) * u


def support_edges(c: float, H: DiscreteSpectrum) -> list[tuple[float, float]]:
    """Disjoint support intervals of the continuous part of ``F^{c,H}`` on ``(0, inf)``.

    The complement of the support is the image of the real ``m`` where the
    inverse map ``z(m)`` is increasing; its critical points are bracketed on a
    dense grid between the poles ``{-1/t_i, 0}`` and refined by bisection.
    """
    c = _check_c(c)
    t, w = H.t, H.w
    poles = sorted(-1.0 / t) + [0.0]
    bounds = [-math.inf, *poles, math.inf]
    gaps: list[tuple[float, float]] = []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        grid = _segment_grid(lo, hi)
        grid = grid[(grid > lo) & (grid < hi)]
        d = _dz(grid, c, t, w)
        # grid points that hit a root exactly would hide the sign change
        keep = (d != 0.0) & np.isfinite(d)
        grid, d = grid[keep], d[keep]
        sign = np.sign(d)
        crits = []
        for i in np.flatnonzero(sign[:-1] * sign[1:] < 0):
            try:
                r = brentq(lambda m: float(_dz(m, c, t, w)), grid[i], grid[i + 1], xtol=1e-300, rtol=1e-15, maxiter=500)
            except (ValueError, RuntimeError) as exc:
                raise NumericalError(f"edge bracketing failed: {exc}") from None
            crits.append(r)
        # walk the monotone pieces; keep the images of increasing ones
        knots = [lo, *crits, hi]
        for a, b in zip(knots[:-1], knots[1:]):
            inside = grid[(grid > a) & (grid < b)]
            if inside.size == 0:
                continue
            if _dz(inside[inside.size // 2], c, t, w) <= 0:
                continue
            za = _limit(a, lo, hi, c, t, w, side=+1)
            zb = _limit(b, lo, hi, c, t, w, side=-1)
            gaps.append((za, zb))
    return _complement_positive(gaps)


def _limit(m: float, lo: float, hi: float, c, t, w, side: int) -> float:
    """Value of ``z`` at a piece end, using one-sided limits at poles and infinity."""
    if math.isinf(m):
        return 0.0
    if m == 0.0:
        return math.inf if side < 0 else -math.inf
    if m == lo or m == hi:
        # at a pole -1/t: approaching from the right gives +inf, from the left -inf
        return math.inf if side > 0 else -math.inf
    return _z_of(m, c, t, w)


def _complement_positive(gaps: list[tuple[float, float]]) -> list[tuple[float, float]]:
    pos = sorted((max(a, 0.0), b) for a, b in gaps if b > 0.0)
    merged: list[list[float]] = []
    for a, b in pos:
        if merged and a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    support = []
    left = 0.0
    for a, b in merged:
        if a > left:
            support.append((left, a))
        left = max(left, b)
    if math.isfinite(left):
        raise NumericalError("support is unbounded; edge search failed")
    return support


@dataclass(frozen=True)
class MpLaw:
    """``F^{c,H}`` with its resolved support and point mass at zero."""

    c: float
    H: DiscreteSpectrum
    support: tuple[tuple[float, float], ...]
    zero_mass: float

    def in_support(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        mask = np.zeros(x.shape, dtype=bool)
        for a, b in self.support:
            mask |= (x >= a) & (x <= b)
        return mask


def mp_law(c: float, H: DiscreteSpectrum | None = None) -> MpLaw:
    H = DiscreteSpectrum.point() if H is None else H
    c = _check_c(c)
    return MpLaw(c, H, tuple(support_edges(c, H)), max(0.0, 1.0 - 1.0 / c))


def density(law: MpLaw, x) -> np.ndarray | float:
    """Density of the continuous part, by Stieltjes inversion with one Richardson step."""
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    out = np.zeros(x.shape)
    mask = law.in_support(x) & (x > 0.0)
    if mask.any():
        xs = x[mask]
        e1, e2 = _EPS_PAIR
        f1 = np.imag(stieltjes(law.c, law.H, xs + 1j * e1)) / math.pi
        f2 = np.imag(stieltjes(law.c, law.H, xs + 1j * e2)) / math.pi
        # linear in eps: f(0) = (e1 f2 - e2 f1) / (e1 - e2)
        out[mask] = np.maximum((e1 * f2 - e2 * f1) / (e1 - e2), 0.0)
    return float(out[0]) if scalar else out


def lsd_moments(c: float, H: DiscreteSpectrum) -> tuple[float, float]:
    """First two moments of ``F^{c,H}``: ``(gamma_1, gamma_2 + c gamma_1^2)``."""
    c = float(c)
    if c < 0:
        raise DomainError("c must be nonnegative")
    g1, g2 = H.moment(1), H.moment(2)
    return g1, g2 + c * g1 * g1


# ---------------------------------------------------------------------------
# Integrals
# ---------------------------------------------------------------------------

def log_integral(c: float, z0: float, tol: float = 1e-12) -> float:
    """``int ln(z0 - x) dF^{c, delta_1}(x)`` for ``z0`` right of the support.

    The edge singularity of the density is removed with
    ``x = a + (b - a) sin^2(theta)``.
    """
    c = _check_c(c)
    a, b = mp_edges(c)
    if not z0 > b:
        raise DomainError(f"z0={z0!r} is not to the right of the support edge {b!r}")

    def integrand(theta):
        s2 = np.sin(theta) ** 2
        x = a + (b - a) * s2
        return (b - a) ** 2 * s2 * (1.0 - s2) / (math.pi * c * x) * np.log(z0 - x)

    value = adaptive_gauss_legendre(integrand, 0.0, 0.5 * math.pi, tol)
    return value + max(0.0, 1.0 - 1.0 / c) * math.log(z0)


def integrate_density(law: MpLaw, f: Callable[[np.ndarray], np.ndarray], order: int = 200) -> float:
    """``int f dF`` over the continuous part (zero atom excluded), Gauss-Legendre per interval."""
    xg, wg = np.polynomial.legendre.leggauss(order)
    theta = 0.25 * math.pi * (xg + 1.0)
    total = 0.0
    for a, b in law.support:
        s = np.sin(theta)
        x = a + (b - a) * s**2
        jac = (b - a) * 2.0 * s * np.cos(theta) * 0.25 * math.pi
        total += float(np.dot(wg, f(x) * density(law, x) * jac))
    return total
