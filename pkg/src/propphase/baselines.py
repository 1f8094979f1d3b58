"""Comparison estimators: the MR bound on p-values and the hybrid Gaussian estimator."""

from __future__ import annotations

import math

import numpy as np

from .errors import SupportError
from .estimator import empirical_phase
from .families import Family, null_cdf
from .kernels import KernelConfig
from .specialfn import std_normal_quantile

__all__ = [
    "pvalues_from_null",
    "mr_estimate",
    "normal_scores",
    "hybrid_jin_estimate",
    "HYBRID_CLAMP",
]

HYBRID_CLAMP = 1e-12
_GAUSSIAN = Family("gaussian", null=0.0, sigma=1.0)


def pvalues_from_null(z, fam: Family) -> np.ndarray:
    """Left-tail p-values ``F0(z_i)`` under the null member of ``fam``."""
    zs = np.asarray(z, dtype=float).ravel()
    if zs.size == 0:
        raise ValueError("need at least one observation")
    bad = np.flatnonzero(np.isnan(zs))
    if fam.is_discrete:
        bad = np.flatnonzero(np.isnan(zs) | (zs < 0) | (zs != np.floor(zs)))
    elif fam.kind in ("gamma", "exponential", "inversegaussian"):
        bad = np.flatnonzero(np.isnan(zs) | (zs < 0))
    if bad.size:
        raise SupportError(f"observation {bad[0]} outside the {fam.kind} support", index=int(bad[0]))
    return np.asarray(null_cdf(fam, zs), dtype=float)


def mr_estimate(p) -> float:
    """Bounding estimator of the alternative proportion from p-values.

    With sorted p-values ``p_(i)`` and ``b = sqrt(2 ln ln m / m)`` this is
    ``max_{2 <= i <= m-2} (i/m - p_(i) - b sqrt(p_(i)(1 - p_(i)))) / (1 - p_(i))``
    clipped to ``[0, 1]``.  Indices with ``p_(i) = 1`` are skipped; ties are
    kept as they are.
    """
    p = np.sort(np.asarray(p, dtype=float).ravel(), kind="stable")
    m = p.size
    if m <= 4:
        raise ValueError("the MR estimator needs more than 4 p-values")
    if np.any(np.isnan(p)) or p[0] < 0 or p[-1] > 1:
        raise ValueError("p-values must lie in [0, 1]")
    b = math.sqrt(2.0 * math.log(math.log(m)) / m)
    i = np.arange(2, m - 1)
    pi = p[i - 1]
    live = pi < 1.0
    if not np.any(live):
        return 0.0
    i, pi = i[live], pi[live]
    q = (i / m - pi - b * np.sqrt(pi * (1.0 - pi))) / (1.0 - pi)
    return float(min(1.0, max(0.0, np.max(q))))


def normal_scores(z, fam: Family) -> np.ndarray:
    """``Phi^{-1}(F0(z_i))`` with the CDF values clamped away from 0 and 1."""
    u = pvalues_from_null(z, fam)
    return np.asarray(std_normal_quantile(np.clip(u, HYBRID_CLAMP, 1.0 - HYBRID_CLAMP)))


def hybrid_jin_estimate(z, fam: Family, gamma: float = 0.5, grid_step: float = 0.01) -> float:
    """Transform to normal scores, then apply the Gaussian estimator.

    Uses ``t = sqrt(2 gamma ln m)``, the triangular density and a grid of
    ``2 / grid_step`` subintervals.  Returns the raw (unclipped) value.
    """
    zs = np.asarray(z, dtype=float).ravel()
    m = zs.size
    if m < 2:
        raise ValueError("the hybrid estimator needs m >= 2")
    grid_n = round(2.0 / grid_step)
    if abs(grid_n * grid_step - 2.0) > 1e-9:
        raise ValueError("grid_step must divide [-1, 1] into equal subintervals")
    cfg = KernelConfig(grid_n=grid_n)
    t = math.sqrt(2.0 * gamma * math.log(m))
    return empirical_phase(normal_scores(zs, fam), t, _GAUSSIAN, cfg).pi1_raw
