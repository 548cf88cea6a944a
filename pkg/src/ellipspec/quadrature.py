"""Adaptive Gauss-Legendre quadrature on finite intervals."""

from __future__ import annotations

from typing import Callable

import numpy as np

__all__ = ["gauss_legendre", "adaptive_gauss_legendre"]

_X, _W = np.polynomial.legendre.leggauss(20)


def gauss_legendre(f: Callable[[np.ndarray], np.ndarray], a: float, b: float) -> float:
    h = 0.5 * (b - a)
    return float(h * np.dot(_W, f(a + h * (_X + 1.0))))


def adaptive_gauss_legendre(
    f: Callable[[np.ndarray], np.ndarray], a: float, b: float, tol: float = 1e-12, max_depth: int = 40
) -> float:
    """Bisect until the 20-point rule and its two halves agree to ``tol``."""

    def rec(lo: float, hi: float, whole: float, tol: float, depth: int) -> float:
        mid = 0.5 * (lo + hi)
        left, right = gauss_legendre(f, lo, mid), gauss_legendre(f, mid, hi)
        if abs(left + right - whole) <= tol or depth >= max_depth:
            return left + right
        return rec(lo, mid, left, 0.5 * tol, depth + 1) + rec(mid, hi, right, 0.5 * tol, depth + 1)

    return rec(a, b, gauss_legendre(f, a, b), tol, 0)
