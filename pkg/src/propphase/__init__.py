"""Estimate the proportion of false null hypotheses from independent test statistics.

The estimator averages ``1 - K(t, z_i)`` where ``K`` solves an integral
equation whose expectation vanishes under every alternative as ``t`` grows
and equals one under the null.  Three kernel constructions cover
location-shift families, discrete exponential families on the naturals and
continuous exponential families with separable moments.
"""

__version__ = "0.1.0"

from .baselines import hybrid_jin_estimate, mr_estimate, pvalues_from_null
from .errors import (
    ConstructionError,
    KernelOverflowError,
    QuadratureError,
    SeriesTruncationWarning,
    SupportError,
)
from .estimator import PhaseEstimate, TuningRule, empirical_phase, oracle_phase, tuning_t, variance_bound
from .families import Construction, Family, construction_for, parse_family
from .kernels import (
    TRIANGULAR,
    AveragingFunction,
    KernelConfig,
    kernel,
    kernel_I,
    kernel_II,
    kernel_III,
    omega_hat_triangular,
    psi_oracle,
)
from .sim import Scenario, run_replication, run_scenario

__all__ = [
    "AveragingFunction",
    "Construction",
    "ConstructionError",
    "Family",
    "KernelConfig",
    "KernelOverflowError",
    "PhaseEstimate",
    "QuadratureError",
    "Scenario",
    "SeriesTruncationWarning",
    "SupportError",
    "TRIANGULAR",
    "TuningRule",
    "construction_for",
    "empirical_phase",
    "hybrid_jin_estimate",
    "kernel",
    "kernel_I",
    "kernel_II",
    "kernel_III",
    "mr_estimate",
    "omega_hat_triangular",
    "oracle_phase",
    "parse_family",
    "psi_oracle",
    "pvalues_from_null",
    "run_replication",
    "run_scenario",
    "tuning_t",
    "variance_bound",
]
