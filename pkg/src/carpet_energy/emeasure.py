"""Cell-resolution tables of the self-similar p-energy measures.

The measure of the cell of a level-n word w is approximated at resolution
m >= n by rho^m times the p-energy of f over the level-m edges internal to
the subtree of w.  Edges joining distinct level-n subtrees are never split
between cells; their total is kept as an explicit crossing defect, which
makes every additivity identity exact instead of approximate:

    sum of masses + crossing defect == rho^m * E_p^(m)(f).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import carpet
from .graph import LevelGraph, build_graph
from .solve import check_p


@dataclass
class EnergyMeasureTable:
    p: float
    rho: float
    resolution: int
    level: int
    masses: np.ndarray  # one nonnegative mass per level-n word
    crossing_defect: float

    @property
    def total(self) -> float:
        return float(self.masses.sum() + self.crossing_defect)

    def to_json_header(self, **kw) -> str:
        return json.dumps(
            {
                "p": self.p,
                "rho": self.rho,
                "m": self.resolution,
                "n": self.level,
                "total": self.total,
                "crossing_defect": self.crossing_defect,
            },
            sort_keys=True,
            **kw,
        )

    def csv_rows(self):
        for code, mass in enumerate(self.masses):
            yield str(carpet.Word(self.level, code)), float(mass)


def _values(f) -> np.ndarray:
    return np.asarray(getattr(f, "values", f), dtype=np.float64)


def _resolution_of(f) -> int:
    if hasattr(f, "resolution"):
        return f.resolution
    n = int(round(np.log(len(f)) / np.log(carpet.NUM_CHILDREN)))
    if carpet.NUM_CHILDREN**n != len(f):
        raise ValueError("length is not a power of 8")
    return n


def energy_measure_table(
    f, p: float, rho: float, n: int, graph: LevelGraph | None = None
) -> EnergyMeasureTable:
    """Masses rho^m * (internal subtree energy) per level-n cell, plus the
    crossing defect carried by edges between distinct subtrees."""
    check_p(p)
    if rho <= 0:
        raise ValueError("rho must be positive")
    m = _resolution_of(f)
    if not 0 <= n <= m:
        raise ValueError(f"report level {n} outside 0..{m}")
    values = _values(f)
    G = graph if graph is not None else build_graph(m)
    block = carpet.NUM_CHILDREN ** (m - n)
    au = G.edges_u // block
    av = G.edges_v // block
    energy = np.abs(values[G.edges_u] - values[G.edges_v]) ** p
    internal = au == av
    scale = rho**m
    masses = scale * np.bincount(
        au[internal], weights=energy[internal], minlength=carpet.NUM_CHILDREN**n
    )
    defect = scale * float(energy[~internal].sum())
    return EnergyMeasureTable(
        p=p, rho=rho, resolution=m, level=n, masses=masses, crossing_defect=defect
    )


def consistency_check(parent: EnergyMeasureTable, child: EnergyMeasureTable):
    """Per-cell defect between a level-n table and its level-(n+1) refinement.

    For every word w: mass_n(w) - sum of child masses equals rho^m times the
    crossing energy internal to w at level n+1, hence is nonnegative.
    Returns the per-cell defects and their total.
    """
    same = (
        parent.p == child.p
        and parent.rho == child.rho
        and parent.resolution == child.resolution
        and child.level == parent.level + 1
    )
    if not same:
        raise ValueError("tables do not match (need same f, p, rho, m and n+1)")
    child_sums = child.masses.reshape(-1, carpet.NUM_CHILDREN).sum(axis=1)
    defects = parent.masses - child_sums
    return {
        "per_cell": defects,
        "total": float(defects.sum()),
        "defect_step": parent.crossing_defect - child.crossing_defect,
    }


def affine_chain_rule_check(f, a: float, b: float, p: float, rho: float, n: int,
                            graph=None) -> float:
    """Max relative error of table(a*f+b) == |a|^p * table(f), entrywise."""
    values = _values(f)
    t1 = energy_measure_table(values, p, rho, n, graph=graph)
    t2 = energy_measure_table(a * values + b, p, rho, n, graph=graph)
    expect = np.append(abs(a) ** p * t1.masses, abs(a) ** p * t1.crossing_defect)
    got = np.append(t2.masses, t2.crossing_defect)
    scale = np.maximum(np.abs(expect), np.abs(got))
    scale[scale == 0] = 1.0
    return float(np.max(np.abs(expect - got) / scale))


def symmetry_pushforward_check(
    f, phi: carpet.SymmetryElement, p: float, rho: float, n: int, graph=None
) -> float:
    """Max relative error of table(f∘tau_phi)(w) == table(f)(tau_phi w)."""
    values = _values(f)
    m = _resolution_of(f)
    perm_m = carpet.symmetry_codes(phi, m)
    composed = values[perm_m]  # (f∘tau_phi)(v) = f(tau_phi v)
    t1 = energy_measure_table(values, p, rho, n, graph=graph)
    t2 = energy_measure_table(composed, p, rho, n, graph=graph)
    perm_n = carpet.symmetry_codes(phi, n) if n else np.zeros(1, dtype=np.int64)
    expect = t1.masses[perm_n]
    scale = np.maximum(np.abs(expect), np.abs(t2.masses))
    scale[scale == 0] = 1.0
    err = float(np.max(np.abs(expect - t2.masses) / scale))
    defect_scale = max(abs(t1.crossing_defect), abs(t2.crossing_defect), 1e-300)
    return max(err, abs(t1.crossing_defect - t2.crossing_defect) / defect_scale)


def triangle_inequality_check(f1, f2, g, p: float, rho: float, n: int,
                              graph=None) -> float:
    """Slack of the weighted L^p triangle inequality of the energy measure.

    Returns (sum g*mass(f1))^(1/p) + (sum g*mass(f2))^(1/p)
    - (sum g*mass(f1+f2))^(1/p); nonnegative up to roundoff.
    """
    g = np.asarray(g, dtype=np.float64)
    if np.any(g < 0):
        raise ValueError("weights must be nonnegative")
    v1, v2 = _values(f1), _values(f2)
    t1 = energy_measure_table(v1, p, rho, n, graph=graph)
    t2 = energy_measure_table(v2, p, rho, n, graph=graph)
    t12 = energy_measure_table(v1 + v2, p, rho, n, graph=graph)
    lhs = float(np.dot(g, t12.masses)) ** (1 / p)
    rhs = float(np.dot(g, t1.masses)) ** (1 / p) + float(np.dot(g, t2.masses)) ** (1 / p)
    return rhs - lhs


def smooth_chain_rule_probe(
    sampler, psi, dpsi, p: float, rho: float, n: int, resolutions
) -> list:
    """Convergence probe for the smooth chain rule.

    ``sampler(m)`` must return the cell values of f at any resolution m (a
    closed-form cell-center sampler).  For each m, compares the table of
    psi∘f against the fine energy of f reweighted by |psi'(f)|^p evaluated
    per cell (each edge takes the mean of its two endpoint cells), and
    reports the max relative error per resolution; errors are expected to
    decrease with m.
    """
    errors = []
    for m in resolutions:
        values = np.asarray(sampler(m), dtype=np.float64)
        G = build_graph(m)
        t_psi = energy_measure_table(psi(values), p, rho, n, graph=G)
        block = carpet.NUM_CHILDREN ** (m - n)
        au = G.edges_u // block
        av = G.edges_v // block
        cellw = np.abs(dpsi(values)) ** p
        weighted = (
            0.5 * (cellw[G.edges_u] + cellw[G.edges_v])
            * np.abs(values[G.edges_u] - values[G.edges_v]) ** p
        )
        internal = au == av
        approx = rho**m * np.bincount(
            au[internal], weights=weighted[internal],
            minlength=carpet.NUM_CHILDREN**n,
        )
        scale = np.maximum(np.abs(approx), np.abs(t_psi.masses))
        scale[scale == 0] = 1.0
        errors.append(float(np.max(np.abs(approx - t_psi.masses) / scale)))
    return errors
