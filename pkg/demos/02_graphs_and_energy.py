# %% [markdown]
# # Approximation graphs and the discrete p-energy calculus
#
# The level-n graph joins cells whose closures intersect; the edge-sharing
# flavor keeps side contact only.  On top of it live the p-energy, the
# degree-normalized p-Laplacian, and the cell-averaging (coarsening)
# operator.

# %%
import numpy as np

from carpet_energy import carpet
from carpet_energy.graph import (
    build_graph, coarsen, graph_ball, p_energy, p_energy_form, p_laplacian_all,
)

G1 = build_graph(1)
print("level 1:", G1.n_vertices, "vertices,", G1.n_edges, "edges,",
      int(G1.edge_is_corner.sum()), "corner-only")
print("degrees:", sorted(G1.degrees().tolist()))
print("edge-sharing ring:", build_graph(1, "edge_sharing").n_edges, "edges")

# %%
import time

t0 = time.time()
G6 = build_graph(6)
print("level 6 built in %.2fs: %d vertices, %d edges"
      % (time.time() - t0, G6.n_vertices, G6.n_edges))

# %% [markdown]
# The indicator of a corner cell has energy equal to its degree for every p,
# and p-Laplacian -1 at the cell itself.

# %%
f = np.zeros(8)
f[0] = 1.0
for p in (1.5, 2.0, 3.0):
    print("p=%g: energy %.6g, Laplacian at cell 1: %.6g"
          % (p, p_energy(G1, f, p), p_laplacian_all(G1, f, p)[0]))

# %% [markdown]
# Integration by parts ties the Laplacian to the two-variable energy form:
# the degree-weighted pairing of Delta_p f with g is minus the form.

# %%
G2 = build_graph(2)
rng = np.random.default_rng(0)
f, g = rng.normal(size=64), rng.normal(size=64)
for p in (1.5, 2.0, 3.0):
    inner = float(np.sum(G2.degrees() * p_laplacian_all(G2, f, p) * g))
    print("p=%g:  <Delta_p f, g>_deg = %.10g   -E_p(f;g) = %.10g"
          % (p, inner, -p_energy_form(G2, f, g, p)))

# %% [markdown]
# Energies are invariant under the dihedral relabelings, and coarsening
# (cell averaging) composes bitwise exactly along the tree.

# %%
G3 = build_graph(3)
h = rng.normal(size=512)
base = p_energy(G3, h, 2.5)
worst = max(abs(p_energy(G3, h[carpet.symmetry_codes(phi, 3)], 2.5) - base)
            for phi in carpet.D4)
print("D4 energy invariance, worst deviation:", worst)
print("tower property bitwise:",
      np.array_equal(coarsen(coarsen(h, 3, 2), 2, 1), coarsen(h, 3, 1)))

# %%
print("ball of radius 1.5 around the corner cell:",
      graph_ball(G1, 0, 1.5).tolist(), " (itself and its two neighbors)")
