"""Spectral statistics of sample covariance matrices from elliptical populations.

Samplers for elliptical data, a Silverstein-equation solver for the limiting
spectral law, CLT parameters for spectral moments, sphericity tests, a
seeded Monte Carlo harness and a returns-data pipeline.
"""

from .clt import MomentCltParams, centering_values, moment_clt_params, standardize_moments
from .errors import ContractError, DomainError, EvaluationError, InputError, NumericalError
from .harness import ExperimentConfig, ReplicationResult, empirical_size_power, qq_correlation, qq_data, run_replications, spiked_model, summarize
from .mplaw import MpLaw, companion_stieltjes, density, log_integral, lsd_moments, mp_edges, mp_law, stieltjes, support_edges
from .pipeline import ReturnsMatrix, group_sample, ingest_prices, log_returns
from .rng import stream
from .sampler import (
    Deterministic,
    DoubleExponential,
    EllipticalModel,
    ExponentialPower,
    IidSumSquares,
    Normal,
    NormalScaleMixture,
    PearsonII,
    RadiusLaw,
    Spike,
    StudentT,
    quadratic_form_cov_oracle,
    radius_moments,
    sample_direction,
    sample_population,
    sample_radius,
)
from .spectral import SpectralSample, alpha_estimators, lss, sample_spectrum, spatial_sign, spectral_moment
from .spectrum import DiscreteSpectrum
from .sphericity import TestConfig, TestReport, run_test, tlr_null_params, tlr_power, tlr_statistic, tlr_tilde_params, tm_pvalue

__version__ = "0.1.0"
