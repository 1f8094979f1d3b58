"""Special functions used by the null CDFs, the kernels and the hybrid baseline.

Thin, domain-checked wrappers around :mod:`scipy.special`.  Every function is
vectorised: scalars in give Python floats out, arrays in give arrays out.
Arguments outside the declared domain raise :class:`ValueError` instead of
silently producing ``nan``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

__all__ = [
    "Accuracy",
    "log_gamma",
    "std_normal_cdf",
    "std_normal_quantile",
    "reg_gamma_lower",
    "reg_gamma_upper",
    "reg_beta",
]


@dataclass(frozen=True)
class Accuracy:
    """Absolute/relative tolerance pair."""

    abs_tol: float = 1e-12
    rel_tol: float = 1e-12

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")


def _as_array(x, name):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


def _out(arr, like):
    if np.ndim(like) == 0:
        return float(arr)
    return arr


def log_gamma(x):
    """Natural log of the Gamma function for ``x > 0``."""
    arr = _as_array(x, "x")
    if np.any(arr <= 0):
        raise ValueError("log_gamma is defined for x > 0 only")
    return _out(special.gammaln(arr), x)


def std_normal_cdf(x):
    """Standard normal CDF."""
    arr = _as_array(x, "x")
    return _out(special.ndtr(arr), x)


def std_normal_quantile(p):
    """Inverse of :func:`std_normal_cdf` on the open interval (0, 1)."""
    arr = _as_array(p, "p")
    if np.any((arr <= 0) | (arr >= 1)):
        raise ValueError("std_normal_quantile requires 0 < p < 1")
    return _out(special.ndtri(arr), p)


def reg_gamma_lower(a, x):
    """Regularised lower incomplete gamma function P(a, x)."""
    a_arr = _as_array(a, "a")
    x_arr = _as_array(x, "x")
    if np.any(a_arr <= 0):
        raise ValueError("reg_gamma_lower requires a > 0")
    if np.any(x_arr < 0):
        raise ValueError("reg_gamma_lower requires x >= 0")
    out = special.gammainc(a_arr, x_arr)
    return float(out) if np.ndim(out) == 0 else out


def reg_gamma_upper(a, x):
    """Complement ``1 - P(a, x)``, computed without cancellation."""
    a_arr = _as_array(a, "a")
    x_arr = _as_array(x, "x")
    if np.any(a_arr <= 0):
        raise ValueError("reg_gamma_upper requires a > 0")
    if np.any(x_arr < 0):
        raise ValueError("reg_gamma_upper requires x >= 0")
    out = special.gammaincc(a_arr, x_arr)
    return float(out) if np.ndim(out) == 0 else out


def reg_beta(x, a, b):
    """Regularised incomplete beta function I_x(a, b)."""
    x_arr = _as_array(x, "x")
    a_arr = _as_array(a, "a")
    b_arr = _as_array(b, "b")
    if np.any((x_arr < 0) | (x_arr > 1)):
        raise ValueError("reg_beta requires 0 <= x <= 1")
    if np.any(a_arr <= 0) or np.any(b_arr <= 0):
        raise ValueError("reg_beta requires a > 0 and b > 0")
    out = special.betainc(a_arr, b_arr, x_arr)
    return float(out) if np.ndim(out) == 0 else out
