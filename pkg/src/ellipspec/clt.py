"""Limiting mean and covariance of the first two sample spectral moments.

For ``beta_hat_j = (1/p) tr(B_n^j)``, ``p (beta_hat_1 - beta_1, beta_hat_2 - beta_2)``
is asymptotically bivariate normal with mean ``(v1, v2)`` and covariance
``[[psi11, psi12], [psi12, psi22]]``.  Every ``(tau - 2)`` term vanishes for
Gaussian data.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainError
from .mplaw import lsd_moments
from .spectrum import DiscreteSpectrum

__all__ = ["MomentCltParams", "moment_clt_params", "centering_values", "standardize_moments"]


@dataclass(frozen=True)
class MomentCltParams:
    v1: float
    v2: float
    psi11: float
    psi12: float
    psi22: float
    c: float
    tau: float
    gamma1: float
    gamma2: float
    gamma3: float
    gamma4: float

    @property
    def cov(self) -> np.ndarray:
        return np.array([[self.psi11, self.psi12], [self.psi12, self.psi22]])

    def to_dict(self) -> dict[str, float]:
        return asdict(self)


def moment_clt_params(c: float, H: DiscreteSpectrum, tau: float) -> MomentCltParams:
    if not c > 0:
        raise DomainError(f"c must be positive, got {c!r}")
    if not (tau >= 0 and math.isfinite(tau)):
        raise DomainError(f"tau must be finite and >= 0, got {tau!r}")
    g1, g2, g3, g4 = (H.moment(j) for j in (1, 2, 3, 4))
    k = tau - 2.0
    v1 = 0.0
    # mean shift of the second moment carries gamma_1 squared, see decisions log
    v2 = c * g2 + c * k * g1**2
    psi11 = 2 * c * g2 + c * k * g1**2
    psi12 = 4 * c * g3 + 4 * c**2 * g1 * g2 + 2 * c * k * g1 * (c * g1**2 + g2)
    psi22 = (
        8 * c * g4
        + 4 * c**2 * g2**2
        + 16 * c**2 * g1 * g3
        + 8 * c**3 * g1**2 * g2
        + 4 * c * k * (c * g1**2 + g2) ** 2
    )
    params = MomentCltParams(v1, v2, psi11, psi12, psi22, float(c), float(tau), g1, g2, g3, g4)
    eig = np.linalg.eigvalsh(params.cov)
    # psi11 = 0 is legitimate (deterministic radius with Sigma = I fixes tr B);
    # standardize_moments refuses it, construction only needs PSD
    if psi11 < 0 or eig[0] < -1e-9 * max(1.0, abs(eig[-1])):
        raise DomainError(f"covariance {params.cov.tolist()} is not positive semidefinite for tau={tau}")
    return params


def centering_values(c_n: float, H_p: DiscreteSpectrum) -> tuple[float, float]:
    """Finite-``(p, n)`` centring ``(beta_n1, beta_n2)`` from ``F^{c_n, H_p}``."""
    return lsd_moments(c_n, H_p)


def standardize_moments(
    beta1_hat: float,
    beta2_hat: float,
    p: int,
    params: MomentCltParams,
    centering: tuple[float, float],
) -> tuple[float, float]:
    if params.psi11 <= 0 or params.psi22 <= 0:
        raise DomainError("standardisation needs positive variances")
    b1, b2 = centering
    z1 = (p * (beta1_hat - b1) - params.v1) / math.sqrt(params.psi11)
    z2 = (p * (beta2_hat - b2) - params.v2) / math.sqrt(params.psi22)
    return z1, z2
