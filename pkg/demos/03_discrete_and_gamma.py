"""Discrete and continuous exponential families.

Poisson and negative binomial counts use the power-series kernel; Gamma
observations use the hypergeometric-series kernel.  The schedules need a
little information about the alternatives (eta_sup or u3), which is taken
from the true parameters here.
"""

import numpy as np

from propphase import Family, KernelConfig, TuningRule, empirical_phase, oracle_phase, tuning_t
from propphase.families import sample

rng = np.random.default_rng(5)
m = 5_000
m1 = m // 5

cases = [
    (Family("poisson", null=0.08), lambda n: 0.08 + rng.uniform(np.log(10), np.log(13), n)),
    (Family("negbinomial", n=5, null=-4.5), lambda n: -4.5 / rng.uniform(8, 15, n)),
    (Family("gamma", sigma=6, null=0.5), lambda n: 1 - 0.5 / rng.uniform(1.2, 1.5, n)),
]

for fam, draw_alt in cases:
    params = np.full(m, fam.null)
    params[:m1] = draw_alt(m1)
    z = sample(fam, params, rng)
    if fam.kind == "poisson":
        rule = TuningRule(gamma=0.5, eta_sup=float(np.exp(params).max()))
    elif fam.kind == "gamma":
        rule = TuningRule(gamma=0.5, u3=float((1 - params).min()))
    else:
        rule = TuningRule(gamma=0.5)
    t = tuning_t(fam, m, rule)
    est = empirical_phase(z, t, fam)
    print(f"{fam.kind:12s} t={t:5.3f}  estimate={est.pi1_raw:.4f}  "
          f"oracle={oracle_phase(params, t, fam):.4f}  true={m1 / m:.2f}")

# The Gamma schedule grows like ln m and is tiny at this m, so the estimate
# is near zero.  Larger t lowers the bias, but the kernel variance climbs
# quickly (try t = 6).
# More series terms keep the truncation tail small at these t.
fam, _ = cases[2]
cfg = KernelConfig(series_n=60)
for t in (2.0, 4.0):
    print(f"gamma        t={t:5.3f}  estimate={empirical_phase(z, t, fam, cfg).pi1_raw:.4f}  "
          f"oracle={oracle_phase(params, t, fam):.4f}")
