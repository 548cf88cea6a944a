"""Elliptical populations ``x = xi * Sigma^{1/2} u``.

Radius laws are normalised so that ``E xi^2 = p`` for every dimension.  Each
law reports its exact fourth moment and the asymptotic constant ``tau`` in
``E xi^4 / (E xi^2)^2 = 1 + tau/p + o(1/p)``.  Student-t and normal scale
mixture radii break that expansion; they exist for negative controls only and
carry ``conforming = False`` with ``tau = nan``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import Any, ClassVar

import numpy as np
from scipy.special import gammaln

from .errors import DomainError
from .spectrum import DiscreteSpectrum

__all__ = [
    "RadiusLaw",
    "Normal",
    "DoubleExponential",
    "ExponentialPower",
    "PearsonII",
    "Deterministic",
    "IidSumSquares",
    "StudentT",
    "NormalScaleMixture",
    "Spike",
    "EllipticalModel",
    "radius_law_from_dict",
    "sample_direction",
    "sample_directions",
    "sample_radius",
    "radius_moments",
    "sample_population",
    "quadratic_form_cov_oracle",
]

_MAX_ENTRIES = 2**31


def _check_p(p: int) -> int:
    if int(p) != p or p < 1:
        raise DomainError(f"dimension must be a positive integer, got {p!r}")
    return int(p)


@dataclass(frozen=True)
class RadiusLaw:
    """Base class; subclasses implement ``_sample_sq`` and ``fourth_moment``."""

    kind: ClassVar[str] = ""
    conforming: ClassVar[bool] = True

    def _sample_sq(self, p: int, rng: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError

    def fourth_moment(self, p: int) -> float:
        raise NotImplementedError

    @property
    def tau(self) -> float:
        raise NotImplementedError

    def sample(self, p: int, rng: np.random.Generator, size: int) -> np.ndarray:
        """``size`` independent radii for dimension ``p``."""
        p = _check_p(p)
        return np.sqrt(self._sample_sq(p, rng, size))

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"kind": self.kind}
        d.update({f.name: getattr(self, f.name) for f in fields(self)})
        return d


@dataclass(frozen=True)
class Normal(RadiusLaw):
    kind: ClassVar[str] = "normal"

    def _sample_sq(self, p, rng, size):
        return rng.chisquare(p, size)

    def fourth_moment(self, p):
        return float(p * p + 2 * p)

    @property
    def tau(self):
        return 2.0


@dataclass(frozen=True)
class DoubleExponential(RadiusLaw):
    """``xi = Gamma(p, 1) / sqrt(p + 1)``."""

    kind: ClassVar[str] = "double_exponential"

    def sample(self, p, rng, size):
        p = _check_p(p)
        return rng.gamma(p, 1.0, size) / math.sqrt(p + 1.0)

    def fourth_moment(self, p):
        return p * (p + 2.0) * (p + 3.0) / (p + 1.0)

    @property
    def tau(self):
        return 4.0


@dataclass(frozen=True)
class ExponentialPower(RadiusLaw):
    """``xi^(2s) ~ Gamma(p/(2s))`` rescaled so that ``E xi^2 = p``."""

    s: float = 1.0
    kind: ClassVar[str] = "exponential_power"

    def __post_init__(self):
        if not self.s > 0:
            raise DomainError(f"exponential power needs s > 0, got {self.s!r}")

    def _scale_sq(self, p: int) -> float:
        a = p / (2.0 * self.s)
        return p * math.exp(gammaln(a) - gammaln(a + 1.0 / self.s))

    def _sample_sq(self, p, rng, size):
        g = rng.gamma(p / (2.0 * self.s), 1.0, size)
        return self._scale_sq(p) * g ** (1.0 / self.s)

    def fourth_moment(self, p):
        a = p / (2.0 * self.s)
        s = self.s
        return p * p * math.exp(gammaln(a + 2.0 / s) + gammaln(a) - 2.0 * gammaln(a + 1.0 / s))

    @property
    def tau(self):
        return 2.0 / self.s


@dataclass(frozen=True)
class PearsonII(RadiusLaw):
    """``xi^2 = (p + beta) * Beta(p/2, beta/2)``."""

    beta: float = 4.0
    kind: ClassVar[str] = "pearson_ii"

    def __post_init__(self):
        if not self.beta > 0:
            raise DomainError(f"Pearson II needs beta > 0, got {self.beta!r}")

    def _sample_sq(self, p, rng, size):
        return (p + self.beta) * rng.beta(p / 2.0, self.beta / 2.0, size)

    def fourth_moment(self, p):
        b = self.beta
        return p * (p + 2.0) * (p + b) / (p + b + 2.0)

    @property
    def tau(self):
        return 0.0


@dataclass(frozen=True)
class Deterministic(RadiusLaw):
    kind: ClassVar[str] = "deterministic"

    def sample(self, p, rng, size):
        p = _check_p(p)
        return np.full(size, math.sqrt(p))

    def fourth_moment(self, p):
        return float(p) ** 2

    @property
    def tau(self):
        return 0.0


@dataclass(frozen=True)
class IidSumSquares(RadiusLaw):
    """``xi^2 = sum_{j<=p} y_j^2`` with a two-point law for ``y^2``.

    ``y^2`` takes values ``a < 1 <= b`` with ``E y^2 = 1`` and ``E y^4 = mu4``.
    For ``mu4 <= 2`` the two values are symmetric about one with equal mass,
    otherwise ``a = 0``.
    """

    mu4: float = 3.0
    kind: ClassVar[str] = "iid_sum_squares"

    def __post_init__(self):
        if not self.mu4 >= 1.0:
            raise DomainError(f"need mu4 >= 1, got {self.mu4!r}")

    def two_point(self) -> tuple[float, float, float]:
        """``(a, b, P(y^2 = b))``."""
        v = self.mu4 - 1.0
        if v <= 1.0:
            d = math.sqrt(v)
            return 1.0 - d, 1.0 + d, 0.5
        return 0.0, self.mu4, 1.0 / self.mu4

    def _sample_sq(self, p, rng, size):
        a, b, q = self.two_point()
        k = rng.binomial(p, q, size)
        return a * (p - k) + b * k

    def fourth_moment(self, p):
        return p * self.mu4 + p * (p - 1.0)

    @property
    def tau(self):
        return self.mu4 - 1.0


@dataclass(frozen=True)
class StudentT(RadiusLaw):
    """``xi^2 / p ~ F(p, dof)`` rescaled to ``E xi^2 = p``.  Non-conforming."""

    dof: float = 6.0
    kind: ClassVar[str] = "student_t"
    conforming: ClassVar[bool] = False

    def __post_init__(self):
        if not self.dof > 4:
            raise DomainError(f"Student-t radius needs dof > 4, got {self.dof!r}")

    def _sample_sq(self, p, rng, size):
        v = self.dof
        return p * (v - 2.0) / v * rng.f(p, v, size)

    def fourth_moment(self, p):
        v = self.dof
        return p * (p + 2.0) * (v - 2.0) / (v - 4.0)

    @property
    def tau(self):
        return math.nan


@dataclass(frozen=True)
class NormalScaleMixture(RadiusLaw):
    """``xi^2 = w * chi2_p`` with ``w ~ Gamma(shape, 1/shape)``.  Non-conforming."""

    shape: float = 2.0
    kind: ClassVar[str] = "normal_scale_mixture"
    conforming: ClassVar[bool] = False

    def __post_init__(self):
        if not self.shape > 0:
            raise DomainError(f"mixture shape must be positive, got {self.shape!r}")

    def _sample_sq(self, p, rng, size):
        w = rng.gamma(self.shape, 1.0 / self.shape, size)
        return w * rng.chisquare(p, size)

    def fourth_moment(self, p):
        return (1.0 + 1.0 / self.shape) * (p * p + 2.0 * p)

    @property
    def tau(self):
        return math.nan


_LAWS: dict[str, type[RadiusLaw]] = {
    cls.kind: cls
    for cls in (
        Normal,
        DoubleExponential,
        ExponentialPower,
        PearsonII,
        Deterministic,
        IidSumSquares,
        StudentT,
        NormalScaleMixture,
    )
}


def radius_law_from_dict(d: dict[str, Any]) -> RadiusLaw:
    d = dict(d)
    kind = d.pop("kind", None)
    if kind not in _LAWS:
        raise DomainError(f"unknown radius kind {kind!r}; choose from {sorted(_LAWS)}")
    try:
        return _LAWS[kind](**d)
    except TypeError as exc:
        raise DomainError(f"bad parameters for radius {kind!r}: {exc}") from None


@dataclass(frozen=True)
class Spike:
    """Rank-one perturbation ``Sigma = I + h v v'`` with unit ``v``."""

    h: float
    v: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.h < 0:
            raise DomainError("spike strength h must be nonnegative")
        v = np.asarray(self.v, dtype=np.float64)
        if v.ndim != 1 or abs(np.linalg.norm(v) - 1.0) > 1e-10:
            raise DomainError("spike direction must be a unit vector")
        object.__setattr__(self, "v", v)


@dataclass(frozen=True)
class EllipticalModel:
    p: int
    radius: RadiusLaw
    spectrum: DiscreteSpectrum = field(default_factory=DiscreteSpectrum.point)
    spike: Spike | None = None

    def __post_init__(self):
        _check_p(self.p)
        if self.spike is not None:
            if self.spike.v.size != self.p:
                raise DomainError("spike direction has the wrong length")
        else:
            # fails early when the weights cannot be realised at this p
            self.spectrum.diagonal(self.p)

    @property
    def tau(self) -> float:
        return self.radius.tau

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> EllipticalModel:
        if "p" not in d or "radius" not in d:
            raise DomainError("model needs 'p' and 'radius'")
        spectrum = DiscreteSpectrum.from_dict(d["spectrum"]) if "spectrum" in d else DiscreteSpectrum.point()
        return cls(int(d["p"]), radius_law_from_dict(d["radius"]), spectrum)

    def to_dict(self) -> dict[str, Any]:
        d = {"p": self.p, "radius": self.radius.to_dict(), "spectrum": self.spectrum.to_dict()}
        if self.spike is not None:
            d["spike"] = {"h": self.spike.h, "v": self.spike.v.tolist()}
        return d


def sample_directions(p: int, rng: np.random.Generator, size: int) -> np.ndarray:
    """``p x size`` matrix whose columns are uniform on the unit sphere."""
    p = _check_p(p)
    z = rng.standard_normal((p, size))
    return z / np.linalg.norm(z, axis=0)


def sample_direction(p: int, rng: np.random.Generator) -> np.ndarray:
    return sample_directions(p, rng, 1)[:, 0]


def sample_radius(law: RadiusLaw, p: int, rng: np.random.Generator) -> float:
    return float(law.sample(p, rng, 1)[0])


def radius_moments(law: RadiusLaw, p: int) -> tuple[float, float, float]:
    """``(E xi^2, E xi^4, tau)``; ``E xi^2 = p`` by construction."""
    p = _check_p(p)
    return float(p), float(law.fourth_moment(p)), law.tau


def sample_population(model: EllipticalModel, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` observations as the columns of a ``p x n`` matrix."""
    if int(n) != n or n < 1:
        raise DomainError(f"sample size must be a positive integer, got {n!r}")
    p = model.p
    if p * n > _MAX_ENTRIES:
        raise MemoryError(f"refusing to allocate a {p} x {n} sample")
    xi = model.radius.sample(p, rng, n)
    u = sample_directions(p, rng, n)
    if model.spike is not None:
        v = model.spike.v
        u += (math.sqrt(1.0 + model.spike.h) - 1.0) * np.outer(v, v @ u)
    else:
        u *= np.sqrt(model.spectrum.diagonal(p))[:, None]
    u *= xi
    return u


def quadratic_form_cov_oracle(c: np.ndarray, c_tilde: np.ndarray, m4: float, p: int) -> float:
    """Exact ``E (x'Cx - tr C)(x'C~x - tr C~)`` for ``x = xi u`` with ``E xi^4 = m4``."""
    c = np.asarray(c, dtype=np.float64)
    c_tilde = np.asarray(c_tilde, dtype=np.float64)
    if c.shape != (p, p) or c_tilde.shape != (p, p):
        raise DomainError(f"expected two {p}x{p} matrices, got {c.shape} and {c_tilde.shape}")
    tr_c = np.trace(c)
    tr_ct = np.trace(c_tilde)
    cross = np.sum(c * c_tilde) + np.sum(c * c_tilde.T)  # tr(C C~') + tr(C C~)
    return float(m4 / (p * (p + 2.0)) * (tr_c * tr_ct + cross) - tr_c * tr_ct)
