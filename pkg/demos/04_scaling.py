# %% [markdown]
# # The p-scaling factor rho(p) and the p-walk dimension
#
# Face-to-face capacities decay geometrically in the level; the rate is the
# p-scaling factor rho(p), and d_w(p) = log(8 rho(p)) / log 3 is the p-walk
# dimension.  Consecutive capacity ratios estimate rho with the unknown
# comparability constants cancelling.

# %%
from carpet_energy import carpet
from carpet_energy.scaling import (
    FRACTAL_DIMENSION, annulus_capacity, ball_loewner_probe, estimate_rho,
    walk_dimension_grid,
)

report = estimate_rho(2.0, 5)
print("p=2 face capacities:", ["%.6g" % c for c in report.face_caps])
print("consecutive ratios: ", ["%.5f" % r for r in report.rho_estimates])
print("rho(2) ~ %.5f   d_w(2) ~ %.5f   d_f = %.5f"
      % (report.rho, report.d_w, report.d_f))
print("d_w(2) >= 2:", report.d_w >= 2, "   d_f - d_w < 1:",
      FRACTAL_DIMENSION - report.d_w < 1)

# %% [markdown]
# Submultiplicativity of the conductance constants at (1,1): the level-2
# capacity is at most the square of the level-1 capacity.

# %%
c1, c2 = report.face_caps[0], report.face_caps[1]
print("C(2) = %.6g <= C(1)^2 = %.6g:" % (c2, c1 * c1), c2 <= c1 * c1)

# %% [markdown]
# The walk dimension grows with p (flagged, not asserted, if the sampled
# grid ever disagrees).

# %%
grid = walk_dimension_grid([1.2, 1.5, 2.0, 3.0, 4.0], n_max=3)
for p, dw in zip(grid["p"], grid["d_w"]):
    print("p=%-4g d_w ~ %.4f" % (p, dw))
print("monotone on the sampled grid:", grid["monotone"])

# %% [markdown]
# Annulus capacities around single cells share the decay rate of the face
# capacities up to a p-dependent constant.

# %%
for word in ("1", "2"):
    w = carpet.Word.from_string(word)
    print("annulus around cell %s, one level down: %.6g"
          % (word, annulus_capacity(2.0, w, 1)))

# %% [markdown]
# A sampled lower-bound probe of the ball Loewner property: the modulus of
# bounded-diameter paths joining nearby balls, normalized by R^(d_w - d_f).

# %%
probe = ball_loewner_probe(2.0, 3, 3.0, 1.0, trials=3, seed=0, d_w=report.d_w)
print("normalized samples:", ["%.4g" % s for s in probe["samples"]])
print("minimum:", "%.4g" % probe["min_normalized"])
