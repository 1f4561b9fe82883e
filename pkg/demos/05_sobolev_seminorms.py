# %% [markdown]
# # Rescaled energies, the Sobolev seminorm proxy, and Korevaar-Schoen
#
# A function known at resolution m is averaged to every coarser level; the
# normalized energies rho^n E_p at those levels stay uniformly comparable
# for such conditional sequences (weak monotonicity), and their max is the
# discrete Sobolev seminorm.

# %%
import numpy as np

from carpet_energy import carpet
from carpet_energy.scaling import estimate_rho, walk_dimension
from carpet_energy.sobolev import (
    average_to_level, ks_energy, poincare_constant, seminorm_report,
)

rho = estimate_rho(2.0, 4).rho
x, y = carpet.cell_centers(5)
report = seminorm_report(x, 2.0, rho)
print("f = x-coordinate at resolution 5, rho =", round(rho, 5))
for n, e in zip(report.levels, report.energies):
    print("  level %d: normalized energy %.6g" % (n, e))
print("seminorm (max) = %.6g, empirical weak-monotonicity constant %.4f"
      % (report.seminorm, report.weak_monotonicity))

# %% [markdown]
# Averaging is the conditional expectation: the mean over the 8 children
# lands exactly on the parent cell center for coordinate functions.

# %%
coarse = average_to_level(x, 4)
x4, _ = carpet.cell_centers(4)
print("max deviation from parent centers:", np.max(np.abs(coarse - x4)))

# %% [markdown]
# The Korevaar-Schoen energy averages |f(x)-f(y)|^p over metric balls of
# radius lambda cells and rescales by r^(-d_w); at the critical exponent it
# is comparable to the seminorm.

# %%
d_w = walk_dimension(rho)
for lam in (1, 2, 3):
    ks = ks_energy(x, 2.0, lam, d_w)
    print("lambda=%d: KS energy %.6g, ratio to seminorm %.3f"
          % (lam, ks, ks / report.seminorm))

# %% [markdown]
# The discrete Poincare constant: the best constant in
# sum_B |f - f_B|^p <= C R^(d_w) E_p(f on 2B) over balls and a test suite.

# %%
out = poincare_constant(3, 2.0, d_w)
print("level 3 empirical Poincare constant: %.4g  (attained by %s)"
      % (out["constant"], out["attaining"]))
