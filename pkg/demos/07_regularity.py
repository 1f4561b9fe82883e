# %% [markdown]
# # Harnack ratios, log-Caccioppoli, and cutoff profiles
#
# Nonnegative p-harmonic functions on a ball have bounded max/min ratio on
# the shrunken ball; the log-Caccioppoli inequality controls logarithmic
# oscillation by cutoff energy; equilibrium cutoffs have controlled energy
# and a positive Hoelder exponent.

# %%
import numpy as np

from carpet_energy import carpet
from carpet_energy.graph import build_graph, graph_ball, p_energy
from carpet_energy.regularity import (
    cutoff_profile, harnack_report, log_caccioppoli_check,
)
from carpet_energy.solve import capacity

G = build_graph(3)
center = carpet.Word.from_string("222").code
reports = harnack_report(3, 2.0, center, 9.0, delta_h=0.25, trials=4, seed=0, graph=G)
print("Harnack ratios over sampled boundary data (level 3, R=9, delta=1/4):")
for r in reports:
    print("  %-10s max/min = %.4g  (residual %.1e)" % (r.label, r.ratio, r.residual))

# %% [markdown]
# Log-Caccioppoli: h is the equilibrium potential of an annulus (positive
# and p-superharmonic inside the outer ball), phi a smaller cutoff.

# %%
inner = graph_ball(G, center, 3)
keep = np.ones(512, dtype=bool)
keep[graph_ball(G, center, 9)] = False
_, sol_h = capacity(G, np.nonzero(keep)[0], inner, None, 2.0)
h = sol_h.values.values + 1e-3
keep2 = np.ones(512, dtype=bool)
keep2[graph_ball(G, center, 5)] = False
_, sol_phi = capacity(G, np.nonzero(keep2)[0], graph_ball(G, center, 2), None, 2.0)
phi = sol_phi.values.values
slack = log_caccioppoli_check(G, 2.0, h, phi)
print("log-Caccioppoli slack (right minus left, nonnegative): %.6g" % slack)

# %% [markdown]
# The cutoff profile: equilibrium potential of cap(B(z,R), B(z,2R)^c),
# its energy against the uniform bound, and the fitted Hoelder exponent.

# %%
prof = cutoff_profile(3, 2.0, center, 9.0, d_w=2.09, graph=G)
print("cutoff energy %.6g, energy * R^d_w / #B = %.4g, theta ~ %.3f"
      % (prof.energy, prof.energy_bound_ratio, prof.theta))
print("profile inside [0,1]:", 0 <= prof.values.min() and prof.values.max() <= 1)

# %%
scales = []
for n in (3, 4):
    z = carpet.Word.from_string("2" * n).code
    pr = cutoff_profile(n, 2.0, z, 3.0 ** (n - 2), d_w=2.09)
    scales.append(pr.energy_bound_ratio)
    print("level %d, R=%d: energy bound ratio %.4g" % (n, 3 ** (n - 2), pr.energy_bound_ratio))
print("stable across levels (within x3):", max(scales) / min(scales) < 3)
