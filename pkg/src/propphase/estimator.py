"""The empirical phase function and the quantities used to tune and check it.

``empirical_phase`` averages ``1 - K(t, z_i)`` over the observations and
estimates the proportion of false nulls; ``oracle_phase`` is its expectation
given the true parameters.  ``tuning_t`` returns the growth schedules for
``t`` under which the estimator is consistent, and ``variance_bound`` the
matching upper bounds on ``Var(empirical - oracle)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConstructionError, KernelOverflowError, SeriesTruncationWarning, SupportError
from .families import (
    Construction,
    Family,
    gf_value,
    modulus_reciprocal,
    radius_of_convergence,
    require_construction,
    separable_moment_data,
)
from .kernels import (
    KernelConfig,
    _check_counts,
    _check_positive,
    _series_III,
    kernel_I,
    kernel_II,
    psi_oracle,
    quadrature,
)

__all__ = [
    "PhaseEstimate",
    "TuningRule",
    "empirical_phase",
    "oracle_phase",
    "tuning_t",
    "variance_bound",
]


@dataclass(frozen=True)
class PhaseEstimate:
    """Value of the empirical phase function at one ``t``."""

    pi1_raw: float
    t_used: float
    m: int
    kernel_overflow_count: int = 0
    series_tail_max: float = 0.0

    @property
    def pi1_clipped(self) -> float:
        return min(1.0, max(0.0, self.pi1_raw))

    @property
    def pi0_clipped(self) -> float:
        return 1.0 - self.pi1_clipped

    def as_dict(self) -> dict:
        return {
            "pi1_raw": self.pi1_raw,
            "pi1_clipped": self.pi1_clipped,
            "pi0_clipped": self.pi0_clipped,
            "t_used": self.t_used,
            "m": self.m,
            "diagnostics": {
                "kernel_overflow_count": self.kernel_overflow_count,
                "series_tail_max": self.series_tail_max,
            },
        }


@dataclass(frozen=True)
class TuningRule:
    """Constant ``gamma`` of a schedule plus the family-specific extras.

    ``eta_sup`` is ``max_i exp(theta_i)`` (Poisson); ``u3`` is
    ``min_i (1 - theta_i)`` (Gamma) or ``min_i mu_i`` (Exponential).
    """

    gamma: float
    eta_sup: float | None = None
    u3: float | None = None

    def __post_init__(self):
        if not (0 < self.gamma <= 1):
            raise ValueError("gamma must lie in (0, 1]")
        if self.eta_sup is not None and not self.eta_sup > 0:
            raise ValueError("eta_sup must be positive")
        if self.u3 is not None and not self.u3 > 0:
            raise ValueError("u3 must be positive")


def _support_checked(z, fam: Family, c: Construction) -> np.ndarray:
    zs = np.asarray(z, dtype=float).ravel()
    if zs.size == 0:
        raise ValueError("need at least one observation")
    try:
        if c is Construction.II:
            return _check_counts(zs).astype(float)
        if c is Construction.III:
            return _check_positive(zs)
    except ValueError as exc:
        bad = _first_bad(zs, c)
        raise SupportError(f"observation {bad} outside the {fam.kind} support: {exc}", index=bad) from None
    bad = np.flatnonzero(~np.isfinite(zs))
    if bad.size:
        raise SupportError(f"observation {bad[0]} is not finite", index=int(bad[0]))
    return zs


def _first_bad(zs, c):
    if c is Construction.II:
        mask = ~np.isfinite(zs) | (zs < 0) | (zs != np.floor(zs))
    else:
        mask = ~np.isfinite(zs) | (zs <= 0)
    return int(np.flatnonzero(mask)[0])


def empirical_phase(z, t: float, fam: Family, cfg: KernelConfig | None = None) -> PhaseEstimate:
    """Estimate the proportion of false nulls as ``mean(1 - K(t, z_i))``."""
    c = require_construction(fam)
    cfg = cfg or KernelConfig()
    t = float(t)
    if not (t >= 0 and math.isfinite(t)):
        raise ValueError("t must be finite and nonnegative")
    zs = _support_checked(z, fam, c)
    tail_max = 0.0
    try:
        if c is Construction.I:
            k = kernel_I(t, zs, fam, cfg)
        elif c is Construction.II:
            k = kernel_II(t, zs, fam, cfg)
        else:
            k, tail = _series_III(t, zs, fam, cfg)
            tail_max = float(np.max(tail))
            if np.any(tail > 1e-3 * np.abs(k)):
                warnings.warn(
                    f"Construction III series truncated at n={cfg.series_n} has tail up to {tail_max:.3g}",
                    SeriesTruncationWarning,
                    stacklevel=2,
                )
    except KernelOverflowError as exc:
        if exc.x is not None:
            idx = int(np.flatnonzero(zs == exc.x)[0])
            raise KernelOverflowError(f"{exc} (observation index {idx})", t=exc.t, x=exc.x) from None
        raise
    k = np.atleast_1d(np.asarray(k, dtype=float))
    pi1 = float(np.sum(1.0 - k) / k.size)
    return PhaseEstimate(pi1_raw=pi1, t_used=t, m=int(k.size), series_tail_max=tail_max)


def oracle_phase(params, t: float, fam: Family, cfg: KernelConfig | None = None) -> float:
    """``mean(1 - psi(t, param_i))``: the expectation of :func:`empirical_phase`."""
    p = np.asarray(params, dtype=float).ravel()
    if p.size == 0:
        raise ValueError("need at least one parameter")
    psi = np.atleast_1d(psi_oracle(t, p, fam, cfg))
    return float(np.sum(1.0 - psi) / p.size)


def tuning_t(fam: Family, m: int, rule: TuningRule) -> float:
    """Schedule ``t_m`` under which the estimator is consistent.

    Gaussian ``sqrt(2 gamma ln m) / sigma``; hyperbolic secant
    ``sigma gamma ln m``; logistic ``gamma ln m / (pi sigma)``; Cauchy
    ``gamma ln m / sigma``; Laplace ``ln m``; Poisson
    ``eta_sup**-0.25 sqrt(gamma ln m)``; generating functions with finite
    radius R and reciprocal derivatives bounded by ``C / k!`` (negative
    binomial, Abel, Takacs) ``gamma ln m / (2 sqrt(R))``; Gamma and
    Exponential ``gamma u3 ln m / 4``.
    """
    c = require_construction(fam)
    if int(m) != m or m < 2:
        raise ValueError("m must be an integer >= 2")
    g = rule.gamma
    log_m = math.log(m)
    kind = fam.kind
    if c is Construction.I:
        s = fam.sigma
        return {
            "gaussian": lambda: math.sqrt(2.0 * g * log_m) / s,
            "hypsecant": lambda: s * g * log_m,
            "logistic": lambda: g * log_m / (math.pi * s),
            "cauchy": lambda: g * log_m / s,
            "laplace": lambda: log_m,
        }[kind]()
    if c is Construction.II:
        if kind == "poisson":
            if rule.eta_sup is None:
                raise ValueError("the Poisson schedule needs eta_sup = max_i exp(theta_i)")
            return rule.eta_sup ** -0.25 * math.sqrt(g * log_m)
        if kind in ("strictarcsine", "largearcsine"):
            raise ConstructionError(
                f"no consistency schedule is available for the {kind} family: "
                "its reciprocal derivative sequence is not dominated by C/k!"
            )
        return g * log_m / (2.0 * math.sqrt(radius_of_convergence(fam)))
    if rule.u3 is None:
        raise ValueError(f"the {kind} schedule needs u3 = min_i (1 - theta_i)")
    return 0.25 * g * rule.u3 * log_m


def variance_bound(fam: Family, t: float, m: int, params=None, cfg: KernelConfig | None = None) -> float:
    """Upper bound on ``Var(empirical_phase - oracle_phase)``.

    Construction I: ``||omega||_inf**2 a(t)**2 / m`` with
    ``a(t) = int_{-1}^{1} 1/r(t s) ds``; every constant is explicit.

    Constructions II and III: the bounds hold up to an unspecified constant,
    taken as 1 here, and only for large ``t``.  Treat them as the shape of the
    variance in ``t`` and ``m``, not as a certified bound.  They need the true
    parameters ``params``.
    """
    c = require_construction(fam)
    cfg = cfg or KernelConfig()
    if int(m) != m or m < 1:
        raise ValueError("m must be a positive integer")
    t = float(t)
    if c is Construction.I:
        a = quadrature(lambda s: modulus_reciprocal(fam, t * s), cfg)
        return cfg.omega.sup_norm ** 2 * a * a / m

    if params is None:
        raise ValueError(f"the Construction {c.value} variance bound needs the true parameters")
    p = np.asarray(params, dtype=float).ravel()
    if t <= 0:
        raise ValueError(f"the Construction {c.value} variance bound needs t > 0")

    if c is Construction.II:
        eta = np.exp(p)
        eta_sup = float(np.max(eta))
        h = np.array([gf_value(fam, float(e)) for e in eta])
        if fam.kind == "poisson":
            return math.exp(t * t * math.sqrt(eta_sup)) / (m * float(np.min(h)))
        if fam.kind in ("strictarcsine", "largearcsine"):
            raise ConstructionError(f"no variance bound is available for the {fam.kind} family")
        phi = float(np.min(h * eta ** 0.25))
        return math.exp(2.0 * t * math.sqrt(eta_sup)) / (math.sqrt(t) * phi * m)

    shape = separable_moment_data(fam, fam.null).shape
    inv_xi = np.array([1.0 / separable_moment_data(fam, float(v)).xi for v in p])
    u3 = float(np.min(inv_xi))
    return math.exp(4.0 * t / u3) * float(np.mean((t / inv_xi) ** (0.75 - shape))) / m
