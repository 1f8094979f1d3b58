"""Distribution families and the quantities each kernel construction needs.

A :class:`Family` names one of the supported families together with its fixed
shape/scale parameter and the null parameter.  The null parameter is the
location ``mu0`` for the location-shift families, the natural parameter
``theta0`` for the exponential families, the rate ``mu0`` for the Exponential
family and the success probability for the Binomial family.

Conventions worth knowing:

* ``hypsecant`` is parametrised so that its characteristic function has
  modulus ``sech(t / sigma)``; its density is
  ``(sigma / 2) sech(pi * sigma * (x - mu) / 2)``.
* ``exponential`` uses the density ``mu exp(-mu x)``, so ``mu`` is a rate and
  the n-th moment is ``n! / mu**n``.
* ``gamma`` uses the density ``(1 - theta)**sigma x**(sigma-1) exp(-(1-theta) x) / Gamma(sigma)``:
  shape ``sigma`` and rate ``1 - theta``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

from .errors import ConstructionError
from .specialfn import reg_beta, reg_gamma_lower, reg_gamma_upper, std_normal_cdf

__all__ = [
    "Construction",
    "Family",
    "SeparableMoments",
    "parse_family",
    "construction_for",
    "require_construction",
    "radius_of_convergence",
    "modulus_reciprocal",
    "phase_offset",
    "log_gf_derivative",
    "gf_value",
    "log_pmf",
    "separable_moment_data",
    "null_cdf",
    "sample",
    "mean_parameter",
]

LOCATION_KINDS = ("gaussian", "laplace", "cauchy", "logistic", "hypsecant")
DISCRETE_KINDS = ("poisson", "negbinomial", "strictarcsine", "largearcsine", "abel", "takacs")
MOMENT_KINDS = ("gamma", "exponential")
NO_KERNEL_KINDS = ("binomial", "inversegaussian")
ALL_KINDS = LOCATION_KINDS + DISCRETE_KINDS + MOMENT_KINDS + NO_KERNEL_KINDS

_SIGMA_KINDS = frozenset(LOCATION_KINDS + ("gamma", "inversegaussian"))
_N_KINDS = frozenset(("negbinomial", "binomial"))

_ALIASES = {
    "normal": "gaussian",
    "hyperbolicsecant": "hypsecant",
    "hsecant": "hypsecant",
    "negativebinomial": "negbinomial",
    "nbinom": "negbinomial",
    "chisquare": "gamma",
    "invgaussian": "inversegaussian",
}

_NONEXISTENCE = {
    "binomial": (
        "no kernel exists for the Binomial family: with finite support the "
        "integral equation forces K to depend on the alternative parameter"
    ),
    "inversegaussian": (
        "no kernel exists for the Inverse Gaussian family: its moment sequence "
        "is not separable and the integral equation has no theta-free solution"
    ),
}

# radius of convergence of the basis generating function
_LARGE_ARCSINE_RADIUS = math.exp(-math.pi / 4) / math.sqrt(2.0)
_RADIUS = {
    "poisson": math.inf,
    "negbinomial": 1.0,
    "strictarcsine": 1.0,
    "largearcsine": _LARGE_ARCSINE_RADIUS,
    "abel": math.exp(-1.0),
    "takacs": 0.25,
}


class Construction(enum.Enum):
    I = "I"
    II = "II"
    III = "III"
    NONE = "None"


def normalize_kind(kind: str) -> str:
    """Canonical family name, resolving aliases such as ``normal``."""
    k = kind.strip().lower().replace("_", "").replace("-", "")
    k = _ALIASES.get(k, k)
    if k not in ALL_KINDS:
        raise ValueError(f"unknown family kind {kind!r}")
    return k


@dataclass(frozen=True)
class Family:
    """A distribution family with fixed nuisance parameters and a null value."""

    kind: str
    null: float = 0.0
    sigma: float | None = None
    n: int | None = None

    def __post_init__(self):
        kind = normalize_kind(self.kind)
        object.__setattr__(self, "kind", kind)

        if kind in _SIGMA_KINDS:
            sigma = 1.0 if self.sigma is None else float(self.sigma)
            if not (math.isfinite(sigma) and sigma > 0):
                raise ValueError(f"{kind}: sigma must be positive, got {self.sigma!r}")
            object.__setattr__(self, "sigma", sigma)
        elif self.sigma is not None:
            raise ValueError(f"{kind} takes no sigma parameter")

        if kind in _N_KINDS:
            n = 1 if self.n is None else self.n
            if int(n) != n or n < 1:
                raise ValueError(f"{kind}: n must be a positive integer, got {self.n!r}")
            object.__setattr__(self, "n", int(n))
        elif self.n is not None:
            raise ValueError(f"{kind} takes no n parameter")

        null = float(self.null)
        if not math.isfinite(null):
            raise ValueError("null parameter must be finite")
        object.__setattr__(self, "null", null)
        if not _in_domain(self, null):
            raise ValueError(f"null parameter {null} outside the natural domain of {kind}")

    @property
    def construction(self) -> Construction:
        return construction_for(self)

    @property
    def is_discrete(self) -> bool:
        return self.kind in DISCRETE_KINDS or self.kind == "binomial"

    def __str__(self):
        parts = [self.kind]
        if self.sigma is not None:
            parts.append(f"sigma={self.sigma:g}")
        if self.n is not None:
            parts.append(f"n={self.n}")
        parts.append(f"null={self.null:g}")
        return " ".join(parts)


def parse_family(text: str, require_kernel: bool = False) -> Family:
    """Parse ``"kind key=value ..."``, e.g. ``"negbinomial n=5 null=-4.5"``.

    With ``require_kernel`` a family for which no kernel exists raises
    :class:`ConstructionError` before its parameters are validated.
    """
    tokens = text.split()
    if not tokens:
        raise ValueError("empty family specification")
    if require_kernel and normalize_kind(tokens[0]) in NO_KERNEL_KINDS:
        raise ConstructionError(_NONEXISTENCE[normalize_kind(tokens[0])])
    kwargs = {}
    for tok in tokens[1:]:
        key, sep, value = tok.partition("=")
        key = key.strip().lower()
        if not sep or not value:
            raise ValueError(f"malformed family parameter {tok!r}; expected key=value")
        if key in ("null", "mu0", "theta0"):
            kwargs["null"] = float(value)
        elif key == "sigma":
            kwargs["sigma"] = float(value)
        elif key == "n":
            if float(value) != int(float(value)):
                raise ValueError(f"n must be an integer, got {value!r}")
            kwargs["n"] = int(float(value))
        else:
            raise ValueError(f"unknown family parameter {key!r}")
    return Family(tokens[0], **kwargs)


def _in_domain(fam: Family, param) -> bool:
    p = np.asarray(param, dtype=float)
    if not np.all(np.isfinite(p)):
        return False
    kind = fam.kind
    if kind in LOCATION_KINDS:
        return True
    if kind in DISCRETE_KINDS:
        radius = _RADIUS[kind]
        return bool(np.all(p < math.log(radius))) if math.isfinite(radius) else True
    if kind in ("gamma",):
        return bool(np.all(p < 1))
    if kind == "exponential":
        return bool(np.all(p > 0))
    if kind == "binomial":
        return bool(np.all((p > 0) & (p < 1)))
    if kind == "inversegaussian":
        return bool(np.all(p < 0))
    return False


def construction_for(fam: Family) -> Construction:
    if fam.kind in LOCATION_KINDS:
        return Construction.I
    if fam.kind in DISCRETE_KINDS:
        return Construction.II
    if fam.kind in MOMENT_KINDS:
        return Construction.III
    return Construction.NONE


def require_construction(fam: Family, *allowed: Construction) -> Construction:
    """Return the family's construction or raise :class:`ConstructionError`."""
    c = construction_for(fam)
    if c is Construction.NONE:
        raise ConstructionError(_NONEXISTENCE[fam.kind])
    if allowed and c not in allowed:
        names = "/".join(a.value for a in allowed)
        raise ConstructionError(
            f"{fam.kind} uses Construction {c.value}, not Construction {names}"
        )
    return c


def radius_of_convergence(fam: Family) -> float:
    """Radius of convergence of the basis generating function H."""
    require_construction(fam, Construction.II)
    return _RADIUS[fam.kind]


def _check_param(fam: Family, param):
    if not _in_domain(fam, param):
        raise ValueError(f"parameter outside the natural domain of {fam.kind}")


def _ret(arr, like):
    return float(arr) if np.ndim(like) == 0 else arr


# ---------------------------------------------------------------- Construction I


def modulus_reciprocal(fam: Family, t):
    """Reciprocal of the characteristic-function modulus, ``1 / r(t)``.

    Even in ``t`` and equal to 1 at ``t = 0``.  Values that overflow come back
    as ``inf``; the kernel turns that into :class:`KernelOverflowError`.
    """
    require_construction(fam, Construction.I)
    t_arr = np.asarray(t, dtype=float)
    sigma = fam.sigma
    with np.errstate(over="ignore", invalid="ignore"):
        if fam.kind == "gaussian":
            out = np.exp(0.5 * (sigma * t_arr) ** 2)
        elif fam.kind == "laplace":
            out = 1.0 + (sigma * t_arr) ** 2
        elif fam.kind == "cauchy":
            out = np.exp(sigma * np.abs(t_arr))
        elif fam.kind == "logistic":
            u = np.abs(np.pi * sigma * t_arr)
            small = u < 1e-4
            safe = np.where(small, 1.0, u)
            out = np.where(small, 1.0 + u * u / 6.0, np.sinh(safe) / safe)
        else:  # hypsecant
            out = np.cosh(t_arr / sigma)
    return _ret(out, t)


def phase_offset(fam: Family, y):
    """Null phase ``y * mu0`` subtracted inside the Construction I cosine."""
    require_construction(fam, Construction.I)
    return _ret(np.asarray(y, dtype=float) * fam.null, y)


# --------------------------------------------------------------- Construction II


@lru_cache(maxsize=None)
def _strict_arcsine_table(size: int) -> np.ndarray:
    # ln c*_k(1): c*_{2n} = prod_{j<n} (1 + 4 j^2), c*_{2n+1} = prod_{j<n} (1 + (2j+1)^2)
    out = np.zeros(size)
    even = np.log1p(4.0 * np.arange(size) ** 2)
    odd = np.log1p((2.0 * np.arange(size) + 1.0) ** 2)
    ce = np.concatenate(([0.0], np.cumsum(even)))
    co = np.concatenate(([0.0], np.cumsum(odd)))
    k = np.arange(size)
    half = k // 2
    out[k % 2 == 0] = ce[half[k % 2 == 0]]
    out[k % 2 == 1] = co[half[k % 2 == 1]]
    return out


@lru_cache(maxsize=None)
def _log_cstar(k: int, sigma: float) -> float:
    # ln c*_k(sigma) from the product recurrence, summed in log space
    if k == 0:
        return 0.0
    half = k // 2
    j = np.arange(half, dtype=float)
    if k % 2 == 0:
        return float(np.sum(np.log(sigma * sigma + 4.0 * j * j)))
    return math.log(sigma) + float(np.sum(np.log(sigma * sigma + (2.0 * j + 1.0) ** 2)))


def _large_arcsine_log_derivative(k: np.ndarray) -> np.ndarray:
    # H^(k)(0) = c_k k! with c_k = c*_k(1 + k) / (k + 1)!
    flat = k.ravel()
    vals = np.array([_log_cstar(int(v), 1.0 + float(v)) - math.log1p(float(v)) for v in flat])
    return vals.reshape(k.shape)


def _as_counts(k) -> np.ndarray:
    arr = np.asarray(k)
    if arr.dtype.kind not in "iu":
        f = np.asarray(arr, dtype=float)
        if not np.all(np.isfinite(f)) or np.any(f != np.floor(f)):
            raise ValueError("k must be a nonnegative integer")
        arr = f.astype(np.int64)
    if np.any(arr < 0):
        raise ValueError("k must be a nonnegative integer")
    return arr.astype(np.int64)


def log_gf_derivative(fam: Family, k):
    """``ln H^(k)(0) = ln(c_k k!)`` for a Construction II family."""
    require_construction(fam, Construction.II)
    kk = _as_counts(k)
    kf = kk.astype(float)
    kind = fam.kind
    if kind == "poisson":
        out = np.zeros(kk.shape)
    elif kind == "negbinomial":
        out = special.gammaln(kf + fam.n) - special.gammaln(fam.n)
    elif kind == "abel":
        out = (kf - 1.0) * np.log1p(kf)
    elif kind == "takacs":
        out = special.gammaln(2.0 * kf + 1.0) - special.gammaln(kf + 2.0)
    elif kind == "strictarcsine":
        size = int(kk.max(initial=0)) + 1
        out = _strict_arcsine_table(max(64, 1 << (size - 1).bit_length()))[kk]
    else:
        out = _large_arcsine_log_derivative(kk)
    return _ret(out, k)


def _log_coefficients(fam: Family, k: np.ndarray) -> np.ndarray:
    return log_gf_derivative(fam, k) - special.gammaln(k + 1.0)


def _power_series(fam: Family, eta: float, rel_tol: float = 1e-12, max_terms: int = 2_000_000):
    """Sum ``sum_k c_k eta^k`` with a geometric bound on the neglected tail."""
    limit_ratio = eta / _RADIUS[fam.kind]
    log_eta = math.log(eta)
    total = 0.0
    start = 0
    chunk = 256
    while start < max_terms:
        k = np.arange(start, start + chunk)
        terms = np.exp(_log_coefficients(fam, k) + k * log_eta)
        total += float(np.sum(terms))
        ratios = terms[-4:][1:] / terms[-4:][:-1]
        q = max(limit_ratio, float(np.max(ratios)))
        if q < 1 and terms[-1] * q / (1 - q) <= rel_tol * total:
            return total
        start += chunk
        chunk = min(chunk * 2, 65536)
    raise ArithmeticError(f"{fam.kind} generating function did not converge at eta={eta}")


def gf_value(fam: Family, eta: float) -> float:
    """Generating function ``H(eta) = sum_k c_k eta^k`` of the basis measure."""
    require_construction(fam, Construction.II)
    eta = float(eta)
    radius = _RADIUS[fam.kind]
    if not (eta > 0 and eta < radius):
        raise ValueError(f"{fam.kind}: eta must lie in (0, {radius:g}), got {eta}")
    if fam.kind == "poisson":
        return math.exp(eta)
    if fam.kind == "negbinomial":
        return (1.0 - eta) ** (-fam.n)
    if fam.kind == "takacs":
        return 2.0 / (1.0 + math.sqrt(1.0 - 4.0 * eta))
    return _power_series(fam, eta)


def log_pmf(fam: Family, theta: float, k):
    """Log probability of ``k`` under the Construction II member with parameter ``theta``."""
    require_construction(fam, Construction.II)
    _check_param(fam, theta)
    kk = _as_counts(k)
    out = _log_coefficients(fam, kk) + kk * theta - math.log(gf_value(fam, math.exp(theta)))
    return _ret(out, k)


# -------------------------------------------------------------- Construction III


@dataclass(frozen=True)
class SeparableMoments:
    """Moments factor as ``xi**n * zeta * a_n`` with ``zeta == 1`` here."""

    xi: float
    shape: float
    zeta: float = 1.0

    def log_a(self, n):
        """``ln a_n = ln Gamma(n + shape) - ln Gamma(shape)``."""
        return special.gammaln(np.asarray(n, dtype=float) + self.shape) - special.gammaln(self.shape)


def separable_moment_data(fam: Family, theta: float) -> SeparableMoments:
    require_construction(fam, Construction.III)
    _check_param(fam, theta)
    if fam.kind == "gamma":
        return SeparableMoments(xi=1.0 / (1.0 - theta), shape=fam.sigma)
    return SeparableMoments(xi=1.0 / theta, shape=1.0)


# ------------------------------------------------------------------- null CDFs


def null_cdf(fam: Family, x):
    """CDF of the null distribution; discrete families are evaluated at ``floor(x)``."""
    x_arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(x_arr)):
        raise ValueError("x must not be NaN")
    kind, mu, sigma = fam.kind, fam.null, fam.sigma
    if kind in LOCATION_KINDS:
        y = (x_arr - mu) / sigma
        if kind == "gaussian":
            out = std_normal_cdf(np.clip(y, -1e300, 1e300))
        elif kind == "laplace":
            out = np.where(y < 0, 0.5 * np.exp(np.minimum(y, 0)), 1.0 - 0.5 * np.exp(-np.maximum(y, 0)))
        elif kind == "cauchy":
            out = 0.5 + np.arctan(y) / np.pi
        elif kind == "logistic":
            out = special.expit(y)
        else:
            with np.errstate(over="ignore"):
                out = (2.0 / np.pi) * np.arctan(np.exp(0.5 * np.pi * sigma * (x_arr - mu)))
        return _ret(np.asarray(out, dtype=float), x)

    if kind in DISCRETE_KINDS:
        k = np.floor(x_arr)
        neg = k < 0
        kc = np.where(neg | ~np.isfinite(k), 0.0, k)
        eta = math.exp(mu)
        if kind == "poisson":
            out = reg_gamma_upper(kc + 1.0, np.full_like(kc, eta))
        elif kind == "negbinomial":
            out = reg_beta(np.full_like(kc, 1.0 - eta), np.full_like(kc, fam.n), kc + 1.0)
        else:
            out = _discrete_cdf_by_summation(fam, kc)
        out = np.where(neg, 0.0, np.asarray(out, dtype=float))
        out = np.where(np.isposinf(x_arr), 1.0, out)
        return _ret(out, x)

    if kind == "gamma":
        pos = np.where(x_arr > 0, x_arr, 0.0)
        out = np.where(x_arr > 0, reg_gamma_lower(np.full_like(pos, sigma), (1.0 - mu) * np.minimum(pos, 1e300)), 0.0)
        return _ret(out, x)
    if kind == "exponential":
        out = np.where(x_arr > 0, -np.expm1(-mu * np.maximum(x_arr, 0)), 0.0)
        return _ret(out, x)
    if kind == "binomial":
        k = np.floor(x_arr)
        kc = np.clip(k, 0, fam.n - 1)
        inner = reg_beta(np.full_like(kc, 1.0 - mu), fam.n - kc, kc + 1.0)
        out = np.where(k < 0, 0.0, np.where(k >= fam.n, 1.0, inner))
        return _ret(out, x)
    # inverse Gaussian with mean sigma / sqrt(-2 theta) and shape sigma^2
    mean = sigma / math.sqrt(-2.0 * mu)
    lam = sigma * sigma
    pos = np.where(x_arr > 0, x_arr, 1.0)
    r = np.sqrt(lam / pos)
    with np.errstate(over="ignore", invalid="ignore"):
        b = np.nan_to_num(np.exp(2.0 * lam / mean) * std_normal_cdf(-r * (pos / mean + 1.0)))
    lower = std_normal_cdf(r * (pos / mean - 1.0)) + b
    # right of the mean work with the survival function to stay monotone near 1
    upper = 1.0 - (std_normal_cdf(-r * (pos / mean - 1.0)) - b)
    out = np.where(pos > mean, upper, lower)
    out = np.where(x_arr > 0, np.clip(out, 0.0, 1.0), 0.0)
    return _ret(out, x)


def _discrete_cdf_by_summation(fam: Family, k: np.ndarray) -> np.ndarray:
    top = int(np.max(k, initial=0))
    grid = np.arange(top + 1)
    pmf = np.exp(log_pmf(fam, fam.null, grid))
    cdf = np.minimum(np.cumsum(pmf), 1.0)
    return cdf[k.astype(np.int64)]


# -------------------------------------------------------------------- sampling


def mean_parameter(fam: Family, param):
    """Mean of the member with the given parameter (median for Cauchy)."""
    p = np.asarray(param, dtype=float)
    _check_param(fam, p)
    if fam.kind in LOCATION_KINDS:
        out = p
    elif fam.kind == "poisson":
        out = np.exp(p)
    elif fam.kind == "negbinomial":
        out = fam.n * np.exp(p) / (1.0 - np.exp(p))
    elif fam.kind == "gamma":
        out = fam.sigma / (1.0 - p)
    elif fam.kind == "exponential":
        out = 1.0 / p
    else:
        raise ValueError(f"no closed-form mean implemented for {fam.kind}")
    return _ret(out, param)


def sample(fam: Family, param, rng: np.random.Generator, size=None):
    """Draw from the member of ``fam`` with parameter ``param``.

    ``param`` may be an array, in which case one draw per entry is returned
    (``size`` then defaults to ``param.shape``).
    """
    p = np.asarray(param, dtype=float)
    _check_param(fam, p)
    if size is None:
        size = p.shape if p.ndim else None
    kind, sigma = fam.kind, fam.sigma
    if kind == "gaussian":
        out = rng.normal(p, sigma, size=size)
    elif kind == "laplace":
        out = rng.laplace(p, sigma, size=size)
    elif kind == "cauchy":
        out = p + sigma * rng.standard_cauchy(size=size)
    elif kind == "logistic":
        out = rng.logistic(p, sigma, size=size)
    elif kind == "hypsecant":
        u = 1.0 - rng.random(size=size)
        out = p + (2.0 / (np.pi * sigma)) * np.log(np.tan(0.5 * np.pi * u))
    elif kind == "poisson":
        out = rng.poisson(np.exp(p), size=size)
    elif kind == "negbinomial":
        out = rng.negative_binomial(fam.n, -np.expm1(p), size=size)
    elif kind == "gamma":
        out = rng.gamma(sigma, 1.0 / (1.0 - p), size=size)
    elif kind == "exponential":
        out = rng.exponential(1.0 / p, size=size)
    else:
        raise ValueError(f"no sampler is provided for the {kind} family")
    if np.ndim(out) == 0:
        return float(out) if kind not in ("poisson", "negbinomial") else int(out)
    return out
