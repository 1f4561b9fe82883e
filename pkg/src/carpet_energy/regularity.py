"""Empirical Harnack ratios, the log-Caccioppoli inequality, and Hoelder
cutoff-function profiles on the approximation graphs."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .graph import LevelGraph, build_graph, graph_ball, p_energy
from .solve import DirichletProblem, capacity, check_p, solve_p_harmonic


@dataclass
class HarnackReport:
    level: int
    p: float
    center: int
    R: float
    delta_h: float
    h_min: float
    h_max: float
    ratio: float
    residual: float
    label: str = ""

    def to_dict(self):
        return {
            "level": self.level,
            "p": self.p,
            "center": self.center,
            "R": self.R,
            "delta_h": self.delta_h,
            "h_min": self.h_min,
            "h_max": self.h_max,
            "ratio": self.ratio,
            "residual": self.residual,
            "label": self.label,
        }


def boundary_sampler(boundary, trials: int, seed: int = 0, eps: float = 1e-3):
    """Nonnegative boundary data: seeded uniform values in [eps, 1], plus the
    structured cases (single spike over eps, linear ramp)."""
    boundary = np.asarray(boundary)
    rng = np.random.default_rng(seed)
    k = len(boundary)
    yield "spike", dict(zip(map(int, boundary), [1.0] + [eps] * (k - 1)))
    ramp = np.linspace(eps, 1.0, k)
    yield "ramp", dict(zip(map(int, boundary), map(float, ramp)))
    for t in range(max(trials - 2, 0)):
        vals = rng.uniform(eps, 1.0, size=k)
        yield f"uniform_{t}", dict(zip(map(int, boundary), map(float, vals)))


def harnack_report(
    n: int,
    p: float,
    center: int,
    R: float,
    delta_h: float = 0.25,
    trials: int = 5,
    seed: int = 0,
    graph: LevelGraph | None = None,
    sampler=boundary_sampler,
    **tols,
) -> list:
    """Harnack max/min ratios of p-harmonic functions on B(center, R).

    For each sampled nonnegative boundary datum on the exterior boundary of
    the ball, solves the Dirichlet problem (harmonic inside the ball) and
    records the extrema over the shrunken ball B(center, delta_h * R).
    """
    check_p(p)
    if not 0 < delta_h < 1:
        raise ValueError("delta_h must be in (0,1)")
    G = graph if graph is not None else build_graph(n)
    ball = graph_ball(G, center, R)
    if len(ball) == G.n_vertices:
        raise ValueError("ball covers the whole graph; no boundary left")
    member = np.zeros(G.n_vertices, dtype=bool)
    member[ball] = True
    touching = np.unique(
        np.concatenate(
            [
                G.edges_v[member[G.edges_u] & ~member[G.edges_v]],
                G.edges_u[member[G.edges_v] & ~member[G.edges_u]],
            ]
        )
    )
    inner = graph_ball(G, center, delta_h * R)
    reports = []
    for label, data in sampler(touching, trials, seed):
        sol = solve_p_harmonic(
            DirichletProblem(graph=G, p=p, boundary=data, domain=ball, **tols)
        )
        h = sol.values.values
        h_min = float(h[inner].min())
        h_max = float(h[inner].max())
        ratio = h_max / h_min if h_min > 0 else float("inf")
        reports.append(
            HarnackReport(
                level=n,
                p=p,
                center=center,
                R=R,
                delta_h=delta_h,
                h_min=h_min,
                h_max=h_max,
                ratio=ratio,
                residual=sol.residual,
                label=label,
            )
        )
    return reports


def log_caccioppoli_check(
    G: LevelGraph, p: float, h, phi, residual_tol: float = 1e-8
) -> float:
    """Slack of the log-Caccioppoli inequality for a positive p-superharmonic
    h and a [0,1] cutoff phi:

        (1/2) sum over edges of closure(supp phi) of
            min(phi(x),phi(y))^p |log h(x) - log h(y)|^p
        <= 2^(p-1)/(p(p-1)) * E_p(phi).

    Returns right side minus left side.
    """
    check_p(p)
    h = np.asarray(getattr(h, "values", h), dtype=np.float64)
    phi = np.asarray(getattr(phi, "values", phi), dtype=np.float64)
    if np.any(phi < -1e-15) or np.any(phi > 1 + 1e-15):
        raise ValueError("phi must take values in [0,1]")
    support = np.nonzero(phi > 0)[0]
    member = np.zeros(G.n_vertices, dtype=bool)
    member[support] = True
    closure = member.copy()
    closure[G.edges_v[member[G.edges_u]]] = True
    closure[G.edges_u[member[G.edges_v]]] = True
    if np.any(h[closure] <= 0):
        raise ValueError("h must be positive on the closed support of phi")
    edge_in = closure[G.edges_u] & closure[G.edges_v]
    eu, ev = G.edges_u[edge_in], G.edges_v[edge_in]
    log_diff = np.abs(np.log(h[eu]) - np.log(h[ev]))
    weight = np.minimum(phi[eu], phi[ev]) ** p
    lhs = 0.5 * float(np.sum(weight * log_diff**p))
    c_p = 2 ** (p - 1) / (p * (p - 1))
    rhs = c_p * p_energy(G, phi, p)
    return rhs - lhs


@dataclass
class CutoffProfile:
    level: int
    p: float
    center: int
    R: float
    energy: float
    energy_bound_ratio: float
    hoelder_pairs: list
    theta: float
    values: np.ndarray

    def to_dict(self):
        return {
            "level": self.level,
            "p": self.p,
            "center": self.center,
            "R": self.R,
            "energy": self.energy,
            "energy_bound_ratio": self.energy_bound_ratio,
            # a degenerate fit window (R < 4) has no slope; keep JSON valid
            "theta": None if np.isnan(self.theta) else self.theta,
            "n_pairs": len(self.hoelder_pairs),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kw)


def cutoff_profile(
    n: int,
    p: float,
    z: int,
    R: float,
    k_outer: float = 2.0,
    d_w: float = 2.0,
    pair_samples: int = 400,
    seed: int = 0,
    graph: LevelGraph | None = None,
    **tols,
) -> CutoffProfile:
    """Equilibrium potential of cap(B(z,R), B(z,k_outer*R)^c) and its
    Hoelder profile.

    energy_bound_ratio = energy * R^d_w / #B(z,R) stays bounded when the
    uniform cutoff energy bound holds; theta is a least-squares fit of
    log oscillation against log(distance/R) over sampled pairs with
    distance <= R/2 (the boundary layer is excluded from the fit).
    """
    check_p(p)
    G = graph if graph is not None else build_graph(n)
    inner = graph_ball(G, z, R)
    outer = graph_ball(G, z, k_outer * R)
    if len(outer) == G.n_vertices:
        raise ValueError("outer ball covers the whole graph; annulus degenerate")
    keep = np.ones(G.n_vertices, dtype=bool)
    keep[outer] = False
    zero_plate = np.nonzero(keep)[0]
    value, sol = capacity(G, zero_plate, inner, None, p, **tols)
    phi = sol.values.values
    ratio = value * R**d_w / len(inner)

    dist = G.distances(z)
    rng = np.random.default_rng(seed)
    shell = np.nonzero((dist >= 0) & (dist < k_outer * R + 1))[0]
    pairs = []
    for _ in range(pair_samples):
        x = int(shell[int(rng.integers(len(shell)))])
        y = int(shell[int(rng.integers(len(shell)))])
        if x == y:
            continue
        dxy = int(G.distances(x)[y])
        if not 1 <= dxy <= R / 2:
            continue
        osc = abs(float(phi[x] - phi[y]))
        pairs.append((dxy / R, osc))
    fit_pairs = [(d, o) for d, o in pairs if o > 0]
    if len(fit_pairs) >= 2 and len({d for d, _ in fit_pairs}) >= 2:
        logs = np.log(np.array(fit_pairs))
        ld = logs[:, 0] - logs[:, 0].mean()
        lo_ = logs[:, 1] - logs[:, 1].mean()
        theta = float(np.dot(ld, lo_) / np.dot(ld, ld))
    else:
        theta = float("nan")
    return CutoffProfile(
        level=n,
        p=p,
        center=z,
        R=R,
        energy=value,
        energy_bound_ratio=float(ratio),
        hoelder_pairs=pairs,
        theta=theta,
        values=phi,
    )
