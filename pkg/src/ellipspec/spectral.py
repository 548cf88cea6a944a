"""Sample covariance spectra, spectral moments, LSS and the spatial-sign transform."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import ContractError, DomainError, EvaluationError

__all__ = [
    "SpectralSample",
    "sample_covariance",
    "symmetric_eigenvalues",
    "sample_spectrum",
    "spectral_moment",
    "lss",
    "spatial_sign",
    "alpha_estimators",
    "alpha_from_moments",
    "gram_moments",
]

_CLAMP = 1e-10


@dataclass(frozen=True)
class SpectralSample:
    """Ascending eigenvalues of a ``p x p`` sample covariance built from ``n`` columns."""

    eigenvalues: np.ndarray
    p: int
    n: int

    def __post_init__(self) -> None:
        lam = np.sort(np.asarray(self.eigenvalues, dtype=np.float64))
        if lam.ndim != 1 or lam.size != self.p:
            raise DomainError(f"expected {self.p} eigenvalues, got shape {lam.shape}")
        if self.n < 1:
            raise DomainError("n must be positive")
        if lam.size and lam[0] < 0.0:
            scale = max(1.0, float(lam[-1]))
            if lam[0] < -_CLAMP * scale:
                raise DomainError(f"eigenvalue {lam[0]!r} is too negative for a PSD matrix")
            lam = np.maximum(lam, 0.0)
        lam.setflags(write=False)
        object.__setattr__(self, "eigenvalues", lam)

    @property
    def c_n(self) -> float:
        return self.p / self.n

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        buf.write(f"# p={self.p},n={self.n}\n")
        buf.write("eigenvalue\n")
        for x in self.eigenvalues:
            buf.write(f"{float(x)!r}\n")
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, source: str | Path) -> SpectralSample:
        """Read from a path, or parse ``source`` directly if it is CSV text."""
        is_text = isinstance(source, str) and "\n" in source
        text = source if is_text else Path(source).read_text()
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("#"):
            raise DomainError("spectrum CSV must start with a '# p=..,n=..' header")
        try:
            meta = dict(item.split("=") for item in lines[0].lstrip("# ").split(","))
            values = [float(x) for x in lines[2:]]
            return cls(np.array(values), int(meta["p"]), int(meta["n"]))
        except (KeyError, ValueError) as exc:
            raise DomainError(f"malformed spectrum CSV: {exc}") from None


def _as_data(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.size == 0:
        raise DomainError(f"expected a nonempty p x n matrix, got shape {x.shape}")
    return x


def sample_covariance(x: np.ndarray) -> np.ndarray:
    """``B = X X' / n`` for a ``p x n`` data matrix (no centring)."""
    x = _as_data(x)
    b = x @ x.T / x.shape[1]
    return 0.5 * (b + b.T)


def symmetric_eigenvalues(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {m.shape}")
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    if np.max(np.abs(m - m.T), initial=0.0) > 1e-10 * scale:
        raise DomainError("matrix is not symmetric")
    return np.linalg.eigvalsh(m)


def sample_spectrum(x: np.ndarray) -> SpectralSample:
    """Spectrum of ``X X'/n``, computed from whichever Gram matrix is smaller.

    When ``p > n`` the ``p - n`` structural zeros are appended exactly.
    """
    x = _as_data(x)
    p, n = x.shape
    if p <= n:
        lam = symmetric_eigenvalues(sample_covariance(x))
    else:
        g = x.T @ x / n
        lam = np.concatenate([np.zeros(p - n), symmetric_eigenvalues(0.5 * (g + g.T))])
    return SpectralSample(lam, p, n)


def spectral_moment(s: SpectralSample, j: int) -> float:
    """``(1/p) sum_i lambda_i**j``."""
    if j < 1:
        raise DomainError("moment order must be >= 1")
    return float(np.mean(s.eigenvalues**j))


def lss(s: SpectralSample, f: Callable[[np.ndarray], np.ndarray] | np.ndarray) -> float:
    """Mean of ``f`` over the eigenvalues.

    ``f`` is either a vectorised callable or a table of values aligned with
    ``s.eigenvalues``.
    """
    lam = s.eigenvalues
    if callable(f):
        with np.errstate(all="ignore"):
            vals = np.asarray(f(lam), dtype=np.float64)
        if vals.shape == ():
            vals = np.full(lam.shape, float(vals))
    else:
        vals = np.asarray(f, dtype=np.float64)
    if vals.shape != lam.shape:
        raise DomainError(f"function table has shape {vals.shape}, expected {lam.shape}")
    bad = ~np.isfinite(vals)
    if bad.any():
        at = float(lam[np.argmax(bad)])
        raise EvaluationError(f"function is not finite at eigenvalue {at!r}", at)
    return float(np.mean(vals))


def spatial_sign(x: np.ndarray) -> np.ndarray:
    """Rescale every column to squared norm ``p``."""
    x = _as_data(x)
    norms = np.linalg.norm(x, axis=0)
    if np.any(norms == 0.0):
        raise DomainError(f"column {int(np.argmin(norms))} is zero; spatial sign undefined")
    return x * (math.sqrt(x.shape[0]) / norms)


def alpha_estimators(s: SpectralSample) -> tuple[float, float]:
    """Plug-in estimators of ``tr(S^2)/p`` and ``tr(S^4)/p`` for the spatial-sign shape matrix."""
    b1, b2, b3, b4 = (spectral_moment(s, j) for j in (1, 2, 3, 4))
    if abs(b1 - 1.0) > 1e-6:
        raise ContractError(f"first spectral moment is {b1!r}; expected spatial-sign data (exactly 1)")
    return alpha_from_moments(b2, b3, b4, s.c_n)


def alpha_from_moments(b2: float, b3: float, b4: float, c: float) -> tuple[float, float]:
    """Same estimators from precomputed moments (no spatial-sign check)."""
    return b2 - c, b4 - 4 * c * b3 - 2 * c * b2**2 + 10 * c**2 * b2 - 5 * c**3


def gram_moments(x: np.ndarray, order: int = 2) -> np.ndarray:
    """``[(1/p) tr(B^j) for j = 1..order]`` with ``B = X X'/n``, via the smaller Gram matrix.

    Equal to ``spectral_moment(sample_spectrum(x), j)`` without an eigendecomposition.
    """
    if not 1 <= order <= 4:
        raise DomainError("gram_moments supports orders 1 to 4")
    x = _as_data(x)
    p, n = x.shape
    g = (x @ x.T if p <= n else x.T @ x) / n
    out = [np.trace(g)]
    if order >= 2:
        out.append(np.sum(g * g))
    if order >= 3:
        g2 = g @ g
        out.append(np.sum(g2 * g))
    if order >= 4:
        out.append(np.sum(g2 * g2))
    return np.asarray(out) / p
