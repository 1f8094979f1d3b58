"""Seeded Monte Carlo harness for comparing the estimators across sparsity regimes.

A :class:`Scenario` fixes the family, the number of hypotheses ``m``, the
sparsity regime, the number of replications and a master seed.  Replication
``r`` draws from its own generator seeded by ``SeedSequence(master_seed,
spawn_key=(r,))``, so results do not depend on how replications are spread
over worker processes.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .baselines import hybrid_jin_estimate, mr_estimate, pvalues_from_null
from .estimator import TuningRule, empirical_phase, tuning_t
from .families import LOCATION_KINDS, Family, parse_family, sample
from .kernels import KernelConfig

__all__ = [
    "REGIMES",
    "ESTIMATORS",
    "CSV_HEADER",
    "Scenario",
    "ReplicationResult",
    "EstimatorStats",
    "ScenarioSummary",
    "ScenarioResult",
    "ReplicationError",
    "child_rng",
    "gen_params",
    "replication_data",
    "new_estimator_t",
    "run_replication",
    "run_scenario",
    "write_long_csv",
    "summary_document",
]

REGIMES = {
    "dense": lambda m: 0.2,
    "moderately_sparse": lambda m: m ** -0.2,
    "critically_sparse": lambda m: m ** -0.5,
    "very_sparse": lambda m: m ** -0.7,
}
_REGIME_ALIASES = {
    "moderate": "moderately_sparse",
    "moderatelysparse": "moderately_sparse",
    "critical": "critically_sparse",
    "criticallysparse": "critically_sparse",
    "verysparse": "very_sparse",
    "very": "very_sparse",
}
ESTIMATORS = ("new", "mr", "hybrid")
CANONICAL_KINDS = frozenset(("laplace", "cauchy", "poisson", "negbinomial", "gamma"))

# alternatives are theta0 * rho or theta0 / rho with rho ~ Unif(lo, hi)
_RHO_RANGE = {"poisson": (10.0, 13.0), "negbinomial": (8.0, 15.0), "gamma": (1.2, 1.5)}
_LOCATION_SHIFT_RANGE = (0.75, 5.0)

CSV_HEADER = ("scenario_id", "family", "m", "regime", "rep", "estimator", "pi1_true", "pi1_hat", "delta_tilde")


def _regime_name(name: str) -> str:
    key = name.strip().lower().replace("-", "_").replace(" ", "_")
    key = _REGIME_ALIASES.get(key.replace("_", ""), key)
    if key not in REGIMES:
        raise ValueError(f"unknown regime {name!r}; choose from {', '.join(REGIMES)}")
    return key


@dataclass(frozen=True)
class Scenario:
    family: Family
    m: int
    regime: str = "dense"
    reps: int = 100
    master_seed: int = 0
    estimators: tuple = ESTIMATORS
    grid_n: int = 400
    series_n: int = 20

    def __post_init__(self):
        if isinstance(self.family, str):
            object.__setattr__(self, "family", parse_family(self.family))
        object.__setattr__(self, "regime", _regime_name(self.regime))
        if int(self.m) != self.m or self.m < 5:
            raise ValueError("m must be an integer >= 5")
        if int(self.reps) != self.reps or self.reps < 1:
            raise ValueError("reps must be a positive integer")
        if not (0 <= int(self.master_seed) < 2 ** 64):
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        est = tuple(e.strip().lower() for e in self.estimators)
        unknown = set(est) - set(ESTIMATORS)
        if unknown or not est:
            raise ValueError(f"unknown estimators {sorted(unknown)}; choose from {ESTIMATORS}")
        object.__setattr__(self, "estimators", tuple(e for e in ESTIMATORS if e in est))
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "reps", int(self.reps))
        object.__setattr__(self, "master_seed", int(self.master_seed))
        if self.family.kind not in LOCATION_KINDS and self.family.kind not in _RHO_RANGE:
            raise ValueError(f"no parameter-generation recipe for the {self.family.kind} family")
        KernelConfig(grid_n=self.grid_n, series_n=self.series_n)

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        d = dict(d)
        if "seed" in d:
            d["master_seed"] = d.pop("seed")
        if isinstance(d.get("estimators"), str):
            d["estimators"] = tuple(d["estimators"].split(","))
        elif "estimators" in d:
            d["estimators"] = tuple(d["estimators"])
        allowed = {"family", "m", "regime", "reps", "master_seed", "estimators", "grid_n", "series_n"}
        extra = set(d) - allowed
        if extra:
            raise ValueError(f"unknown scenario fields: {sorted(extra)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return {
            "family": str(self.family),
            "m": self.m,
            "regime": self.regime,
            "reps": self.reps,
            "master_seed": self.master_seed,
            "estimators": list(self.estimators),
            "grid_n": self.grid_n,
            "series_n": self.series_n,
        }

    @property
    def kernel_config(self) -> KernelConfig:
        return KernelConfig(grid_n=self.grid_n, series_n=self.series_n)

    @property
    def pi1_nominal(self) -> float:
        return REGIMES[self.regime](self.m)

    @property
    def m1(self) -> int:
        # floor, with a guard against 0.2 * m landing just below an integer
        return int(math.floor(self.m * self.pi1_nominal + 1e-9))

    @property
    def pi1_true(self) -> float:
        return self.m1 / self.m

    @property
    def canonical(self) -> bool:
        return self.family.kind in CANONICAL_KINDS

    @property
    def scenario_id(self) -> str:
        return f"{self.family.kind}-m{self.m}-{self.regime}-s{self.master_seed}"


def child_rng(master_seed: int, rep: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(master_seed, spawn_key=(rep,))))


def gen_params(sc: Scenario, rng: np.random.Generator) -> np.ndarray:
    """True parameters: ``m - m1`` nulls followed by ``m1`` alternatives."""
    fam = sc.family
    m1 = sc.m1
    params = np.full(sc.m, fam.null)
    if fam.kind in LOCATION_KINDS:
        lo, hi = _LOCATION_SHIFT_RANGE
        size = rng.uniform(lo, hi, size=m1)
        sign = np.where(rng.random(size=m1) < 0.5, -1.0, 1.0)
        params[sc.m - m1:] = fam.null + sign * size
    else:
        lo, hi = _RHO_RANGE[fam.kind]
        rho = rng.uniform(lo, hi, size=m1)
        half = m1 // 2
        alt = np.concatenate((fam.null * rho[:half], fam.null / rho[half:]))
        params[sc.m - m1:] = alt
    return params


def replication_data(sc: Scenario, rep: int):
    """``(params, z)`` for replication ``rep``."""
    rng = child_rng(sc.master_seed, rep)
    params = gen_params(sc, rng)
    z = np.asarray(sample(sc.family, params, rng), dtype=float)
    return params, z


def new_estimator_t(sc: Scenario, params) -> float:
    """Schedule used for the new estimator inside the harness.

    Laplace ``ln m``, Cauchy ``sqrt(ln m)``, Poisson
    ``max(eta)**-0.25 sqrt(ln m)``, negative binomial ``ln m / 2``, Gamma
    ``ln m min(1 - theta) / 4``.  The Poisson and Gamma schedules read the
    true parameters.  Other location families use their ``gamma = 0.5``
    schedule.
    """
    fam, m = sc.family, sc.m
    p = np.asarray(params, dtype=float)
    kind = fam.kind
    if kind == "cauchy":
        return math.sqrt(math.log(m))
    if kind in LOCATION_KINDS:
        return tuning_t(fam, m, TuningRule(gamma=0.5))
    if kind == "poisson":
        return tuning_t(fam, m, TuningRule(gamma=1.0, eta_sup=float(np.max(np.exp(p)))))
    if kind == "negbinomial":
        return tuning_t(fam, m, TuningRule(gamma=1.0))
    return tuning_t(fam, m, TuningRule(gamma=1.0, u3=float(np.min(1.0 - p))))


@dataclass(frozen=True)
class ReplicationResult:
    rep_index: int
    pi1_true: float
    pi1_hat: dict
    t_new: float | None = None

    @property
    def delta_tilde(self) -> dict:
        return {k: v / self.pi1_true - 1.0 for k, v in self.pi1_hat.items()}


class ReplicationError(RuntimeError):
    def __init__(self, rep, cause):
        super().__init__(f"replication {rep} failed: {type(cause).__name__}: {cause}")
        self.rep = rep


def run_replication(sc: Scenario, rep: int) -> ReplicationResult:
    if not 0 <= rep < sc.reps:
        raise ValueError(f"rep must lie in [0, {sc.reps})")
    try:
        params, z = replication_data(sc, rep)
        hats = {}
        t_new = None
        if "new" in sc.estimators:
            t_new = new_estimator_t(sc, params)
            hats["new"] = empirical_phase(z, t_new, sc.family, sc.kernel_config).pi1_clipped
        if "mr" in sc.estimators:
            hats["mr"] = mr_estimate(pvalues_from_null(z, sc.family))
        if "hybrid" in sc.estimators:
            hats["hybrid"] = min(1.0, max(0.0, hybrid_jin_estimate(z, sc.family)))
    except Exception as exc:
        raise ReplicationError(rep, exc) from exc
    return ReplicationResult(rep_index=rep, pi1_true=sc.pi1_true, pi1_hat=hats, t_new=t_new)


@dataclass(frozen=True)
class EstimatorStats:
    mean: float
    sd: float
    zero_fraction: float


@dataclass(frozen=True)
class ScenarioSummary:
    stats: dict
    runtime_seconds: float = field(default=0.0, compare=False)


@dataclass(frozen=True)
class ScenarioResult:
    scenario: Scenario
    summary: ScenarioSummary
    replications: tuple


def _run_one(args):
    sc, rep = args
    return run_replication(sc, rep)


def summarize(sc: Scenario, reps) -> dict:
    stats = {}
    for est in sc.estimators:
        d = np.array([r.delta_tilde[est] for r in reps])
        hats = np.array([r.pi1_hat[est] for r in reps])
        sd = float(np.std(d, ddof=1)) if d.size > 1 else 0.0
        stats[est] = EstimatorStats(float(np.mean(d)), sd, float(np.mean(hats == 0.0)))
    return stats


def run_scenario(sc: Scenario, workers: int = 1) -> ScenarioResult:
    """Run every replication and summarise ``pi1_hat / pi1_true - 1`` per estimator."""
    if int(workers) != workers or workers < 1:
        raise ValueError("workers must be a positive integer")
    start = time.perf_counter()
    jobs = [(sc, r) for r in range(sc.reps)]
    if workers == 1:
        reps = [_run_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=int(workers)) as pool:
            reps = list(pool.map(_run_one, jobs, chunksize=max(1, sc.reps // (4 * workers))))
    summary = ScenarioSummary(summarize(sc, reps), time.perf_counter() - start)
    return ScenarioResult(sc, summary, tuple(reps))


def write_long_csv(result: ScenarioResult, fh=None) -> str:
    """Long-format CSV, one row per (replication, estimator).  Returns the text."""
    sc = result.scenario
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in result.replications:
        delta = r.delta_tilde
        for est in sc.estimators:
            w.writerow(
                (sc.scenario_id, str(sc.family), sc.m, sc.regime, r.rep_index, est,
                 repr(r.pi1_true), repr(r.pi1_hat[est]), repr(delta[est]))
            )
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text


def summary_document(result: ScenarioResult) -> dict:
    sc = result.scenario
    return {
        "scenario_id": sc.scenario_id,
        "scenario": sc.to_dict(),
        "pi1_nominal": sc.pi1_nominal,
        "m1": sc.m1,
        "pi1_true": sc.pi1_true,
        "m1_rounding": "floor",
        "canonical": sc.canonical,
        "oracle_assisted_tuning": sc.family.kind in ("poisson", "gamma") and "new" in sc.estimators,
        "estimators": {
            est: {"mean": s.mean, "sd": s.sd, "zero_fraction": s.zero_fraction}
            for est, s in result.summary.stats.items()
        },
        "runtime_seconds": result.summary.runtime_seconds,
    }


def dump_summary(result: ScenarioResult) -> str:
    return json.dumps(summary_document(result), indent=2)
