"""Estimate the non-null fraction for Gaussian and Cauchy location data.

A fraction pi1 of the means is drawn away from zero and the rest are null.
The estimator is evaluated at the consistency schedule t_m and compared
with the oracle value computed from the true parameters.
"""

import numpy as np

from propphase import Family, TuningRule, empirical_phase, oracle_phase, tuning_t, variance_bound
from propphase.families import sample

rng = np.random.default_rng(11)
m, pi1 = 20_000, 0.1
m1 = int(pi1 * m)

for kind in ("gaussian", "cauchy"):
    fam = Family(kind)
    params = np.zeros(m)
    params[:m1] = rng.choice([-1, 1], m1) * rng.uniform(1.0, 3.0, m1)
    z = sample(fam, params, rng)

    t = tuning_t(fam, m, TuningRule(gamma=0.5))
    est = empirical_phase(z, t, fam)
    target = oracle_phase(params, t, fam)
    sd = np.sqrt(variance_bound(fam, t, m))
    print(f"{kind:9s} t={t:5.2f}  estimate={est.pi1_raw:.4f}  oracle={target:.4f}  "
          f"true={pi1:.2f}  sd bound={sd:.4f}")
