"""Tour of the three kernel constructions and their expectation curves.

For each family the kernel K(t, x) has expectation psi(t, param).  Under the
null psi is identically one, and under an alternative it fades as t grows.
Discrete families also carry the factor H(eta0) / H(eta), so their curves
start below one at an alternative.
"""

import numpy as np

from propphase import Family, kernel, psi_oracle

families = {
    "Gaussian (location)": (Family("gaussian"), 1.0),
    "Laplace (location)": (Family("laplace"), 1.0),
    "Poisson (discrete NEF)": (Family("poisson", null=0.08), 0.96),
    "Gamma, shape 6 (continuous NEF)": (Family("gamma", sigma=6, null=0.5), 0.6),
}

ts = np.array([0.0, 1.0, 2.0, 4.0, 8.0])
print("psi(t) at the null and at one alternative")
for label, (fam, alt) in families.items():
    at_null = psi_oracle(ts, fam.null, fam)
    at_alt = psi_oracle(ts, alt, fam)
    print(f"  {label}")
    print("    t     " + "  ".join(f"{t:8.1f}" for t in ts))
    print("    null  " + "  ".join(f"{v:8.4f}" for v in at_null))
    print("    alt   " + "  ".join(f"{v:8.4f}" for v in at_alt))

# The kernel itself is bounded for location families but grows for the
# exponential families, which is why t has to be tuned.
fam = Family("laplace")
x = np.linspace(-4, 4, 9)
print("\nLaplace kernel K(2, x):", np.round(kernel(2.0, x, fam), 4))
fam = Family("poisson", null=0.08)
print("Poisson kernel K(2, k):", np.round(kernel(2.0, np.arange(6), fam), 4))
