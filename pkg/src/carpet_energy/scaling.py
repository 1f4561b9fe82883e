"""Conductance scaling: face capacities, annulus capacities, the p-scaling
factor rho(p), the p-walk dimension, and ball-Loewner modulus probes.

The annulus conductance constant decays like rho(p)^-n; face-to-face
capacities share the rate, so consecutive face-capacity ratios estimate
rho(p) with the unknown comparability constants cancelling at first order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import carpet
from .graph import LevelGraph, build_graph, graph_ball
from .solve import capacity, check_p, vertex_modulus

FRACTAL_DIMENSION = math.log(8) / math.log(3)

# desk-scale feasibility defaults: p=2 is a linear solve, general p is not
FEASIBLE_LEVEL_P2 = 6
FEASIBLE_LEVEL_GENERAL = 5


def walk_dimension(rho: float) -> float:
    """d_w(p) = log(8 rho(p)) / log 3."""
    return math.log(8.0 * rho) / math.log(3.0)


def face_capacity(p: float, n: int, graph: LevelGraph | None = None) -> float:
    """Left-right face capacity on the level-n touching graph."""
    check_p(p)
    G = graph if graph is not None else build_graph(n)
    left = carpet.face_codes(n, "L")
    right = carpet.face_codes(n, "R")
    value, _ = capacity(G, left, right, None, p)
    return value


def annulus_capacity(
    p: float, w: carpet.Word, n: int, graph: LevelGraph | None = None
) -> float:
    """Capacity of the combinatorial annulus around the cell of ``w``.

    In the level-(n+|w|) graph: inner plate = descendants of w, outer plate
    = complement of the descendants of the radius-2 ball around w at level
    |w|.
    """
    check_p(p)
    m = w.level
    if m < 1 or n < 1:
        raise ValueError("need |w| >= 1 and n >= 1")
    Gm = build_graph(m)
    ball = graph_ball(Gm, w.code, 2)
    if len(ball) == carpet.NUM_CHILDREN**m:
        raise ValueError("radius-2 ball covers the whole level; annulus degenerate")
    G = graph if graph is not None else build_graph(n + m)
    blow = carpet.NUM_CHILDREN**n

    def descendants(codes):
        base = np.asarray(codes, dtype=np.int64) * blow
        return (base[:, None] + np.arange(blow, dtype=np.int64)[None, :]).ravel()

    inner = descendants([w.code])
    keep = np.ones(G.n_vertices, dtype=bool)
    keep[descendants(ball)] = False
    outer = np.nonzero(keep)[0]
    value, _ = capacity(G, outer, inner, None, p)
    return value


@dataclass
class ScalingReport:
    p: float
    levels: list
    face_caps: list
    annulus_caps: dict = field(default_factory=dict)
    rho_estimates: list = field(default_factory=list)
    rho: float = float("nan")
    d_w: float = float("nan")
    d_f: float = FRACTAL_DIMENSION

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "levels": list(self.levels),
            "face_caps": list(self.face_caps),
            "annulus_caps": dict(self.annulus_caps),
            "rho_estimates": list(self.rho_estimates),
            "rho": self.rho,
            "d_w": self.d_w,
            "d_f": self.d_f,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kw)

    def csv_rows(self):
        """(n, face_cap, ratio) series for plotting."""
        rows = []
        for i, n in enumerate(self.levels):
            ratio = self.rho_estimates[i] if i < len(self.rho_estimates) else ""
            rows.append((n, self.face_caps[i], ratio))
        return rows


def estimate_rho(
    p: float,
    n_max: int,
    annulus_words: tuple = (),
    annulus_depth: int = 1,
) -> ScalingReport:
    """Estimate rho(p) from consecutive face-capacity ratios up to n_max.

    The selected estimate is the last ratio C^(n_max-1)/C^(n_max); the full
    ratio sequence is reported so stability can be judged.  Optional words
    trigger annulus-capacity spot checks.
    """
    check_p(p)
    if n_max < 2:
        raise ValueError("need n_max >= 2 for a ratio")
    levels = list(range(1, n_max + 1))
    caps = [face_capacity(p, n) for n in levels]
    ratios = [caps[i] / caps[i + 1] for i in range(len(caps) - 1)]
    rho = ratios[-1]
    annulus = {
        str(w): annulus_capacity(p, w, annulus_depth) for w in annulus_words
    }
    return ScalingReport(
        p=p,
        levels=levels,
        face_caps=caps,
        annulus_caps=annulus,
        rho_estimates=ratios,
        rho=rho,
        d_w=walk_dimension(rho),
    )


def walk_dimension_grid(ps, n_max: int = 3):
    """d_w(p) on a grid of p values; flags non-monotonicity instead of failing."""
    values = [estimate_rho(p, n_max).d_w for p in ps]
    monotone = all(b > a for a, b in zip(values, values[1:]))
    return {"p": list(ps), "d_w": values, "monotone": monotone}


def ball_loewner_probe(
    p: float,
    n: int,
    R: float,
    kappa: float,
    trials: int,
    seed: int = 0,
    graph: LevelGraph | None = None,
    d_w: float | None = None,
    eps_path: float = 1e-4,
):
    """Sampled lower-bound probe of the ball combinatorial Loewner property.

    Draws ball pairs of radius R at distance <= kappa*R, computes the vertex
    p-modulus of connecting paths inside the joint enlarged ball (this is
    the bounded-diameter restriction), and reports the minimum of
    Mod * R^(d_w - d_f) over the sample.
    """
    check_p(p)
    if R < 1:
        raise ValueError("R must be >= 1")
    G = graph if graph is not None else build_graph(n)
    if d_w is None:
        d_w = walk_dimension(estimate_rho(p, min(n, 3)).rho)
    rng = np.random.default_rng(seed)
    n_vertices = G.n_vertices
    results = []
    attempts = 0
    while len(results) < trials and attempts < 50 * trials:
        attempts += 1
        x = int(rng.integers(n_vertices))
        dx = G.distances(x)
        limit = kappa * R
        candidates = np.nonzero((dx >= 2 * R) & (dx <= 2 * R + limit))[0]
        if len(candidates) == 0:
            continue
        y = int(candidates[int(rng.integers(len(candidates)))])
        B1 = graph_ball(G, x, R)
        B2 = graph_ball(G, y, R)
        if len(np.intersect1d(B1, B2)):
            continue
        hull = np.nonzero((dx < (2 + kappa + 2) * R) | (G.distances(y) < (2 + kappa + 2) * R))[0]
        mod = vertex_modulus(G, B1, B2, hull, p, eps_path=eps_path)
        results.append(mod.value * R ** (d_w - FRACTAL_DIMENSION))
    if not results:
        raise ValueError("no admissible ball pair at these parameters")
    return {
        "p": p,
        "n": n,
        "R": R,
        "kappa": kappa,
        "d_w": d_w,
        "samples": results,
        "min_normalized": min(results),
    }
