"""Cell functions, averaging/lifting operators, normalized energies, the
Sobolev seminorm proxy, Korevaar-Schoen energies, and discrete Poincare
constants.

A cell function holds one value per level-m cell (the cell average, i.e.
the piecewise-constant representative).  Averaging to a coarser level is
the conditional expectation; since the self-similar measure is uniform on
cells this is the plain mean over descendants.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from . import carpet
from .graph import LevelGraph, build_graph, coarsen, p_energy
from .solve import capacity, check_p


@dataclass(frozen=True)
class CellFunction:
    """One real value per level-m word, in word-encoding order."""

    resolution: int
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (carpet.NUM_CHILDREN**self.resolution,):
            raise ValueError("value count does not match 8^resolution")
        if not np.all(np.isfinite(values)):
            raise ValueError("values must be finite")
        object.__setattr__(self, "values", values)


def _resolution_of(f) -> int:
    if hasattr(f, "resolution"):
        return f.resolution
    if hasattr(f, "level"):
        return f.level
    n = int(round(np.log(len(f)) / np.log(carpet.NUM_CHILDREN)))
    if carpet.NUM_CHILDREN**n != len(f):
        raise ValueError("length is not a power of 8")
    return n


def _values(f) -> np.ndarray:
    return np.asarray(getattr(f, "values", f), dtype=np.float64)


def average_to_level(f, n: int) -> np.ndarray:
    """Cell averages of f at level n <= resolution (the M_n operator)."""
    m = _resolution_of(f)
    return coarsen(_values(f), m, n)


def lift_to_level(f, m: int) -> np.ndarray:
    """Piecewise-constant lift of level-n values to resolution m >= n."""
    n = _resolution_of(f)
    if m < n:
        raise ValueError("lift target must not be coarser")
    return np.repeat(_values(f), carpet.NUM_CHILDREN ** (m - n))


def restrict_to_cell(f, w: carpet.Word) -> CellFunction:
    """The subtree of values under w, i.e. the cell function of f∘F_w."""
    m = _resolution_of(f)
    if w.level > m:
        raise ValueError("word deeper than the resolution")
    block = carpet.NUM_CHILDREN ** (m - w.level)
    values = _values(f)[w.code * block:(w.code + 1) * block]
    return CellFunction(m - w.level, values.copy())


def normalized_energy(f, n: int, p: float, rho: float, graph=None) -> float:
    """rho^n times the level-n graph p-energy of the cell averages."""
    check_p(p)
    if rho <= 0:
        raise ValueError("rho must be positive")
    G = graph if graph is not None else build_graph(n)
    return rho**n * p_energy(G, average_to_level(f, n), p)


@dataclass
class SeminormReport:
    p: float
    rho: float
    levels: list
    energies: list
    seminorm: float
    weak_monotonicity: float

    def to_json(self, **kw) -> str:
        return json.dumps(
            {
                "p": self.p,
                "rho": self.rho,
                "levels": list(self.levels),
                "energies": list(self.energies),
                "seminorm": self.seminorm,
                "weak_monotonicity": self.weak_monotonicity,
            },
            sort_keys=True,
            **kw,
        )


def seminorm_report(f, p: float, rho: float, graphs: dict | None = None) -> SeminormReport:
    """All normalized energies up to the resolution, their max (the Sobolev
    seminorm proxy), and the empirical weak-monotonicity constant
    max over k < l of E~(k)/E~(l) (1 by convention when no level is nonzero).
    """
    check_p(p)
    m = _resolution_of(f)
    levels = list(range(1, m + 1))
    energies = []
    for n in levels:
        G = graphs.get(n) if graphs else None
        energies.append(normalized_energy(f, n, p, rho, graph=G))
    c_wm = 1.0
    for i in range(len(energies)):
        for j in range(i + 1, len(energies)):
            if energies[j] > 0:
                c_wm = max(c_wm, energies[i] / energies[j])
    return SeminormReport(
        p=p,
        rho=rho,
        levels=levels,
        energies=energies,
        seminorm=max(energies, default=0.0),
        weak_monotonicity=c_wm,
    )


def _ball_matrix(G: LevelGraph, radius: int) -> sparse.csr_matrix:
    """Boolean closed-ball pattern: entry (x,y) set iff d(x,y) <= radius."""
    n = G.n_vertices
    A = G.adjacency_matrix().astype(bool) + sparse.identity(n, dtype=bool, format="csr")
    B = A
    for _ in range(radius - 1):
        B = (B @ A).astype(bool)
    return B.tocsr()


def ks_energy(f, p: float, lam: int, d_w: float, graph=None) -> float:
    """Korevaar-Schoen energy at ball radius lam cells and exponent d_w.

    The continuum ball of radius r = lam*3^-m is realized as the closed
    graph ball {y : d_m(x,y) <= lam} on the touching graph; cells carry
    mass 8^-m:

        r^-d_w * sum_x 8^-m * mean_{y in ball(x)} |f(x)-f(y)|^p.
    """
    check_p(p)
    if lam < 1:
        raise ValueError("ball radius must be >= 1 cell")
    m = _resolution_of(f)
    values = _values(f)
    G = graph if graph is not None else build_graph(m)
    B = _ball_matrix(G, int(lam))
    indptr, cols = B.indptr, B.indices
    counts = np.diff(indptr)
    center = np.repeat(values, counts)
    diffs = np.abs(center - values[cols]) ** p
    per_vertex = np.add.reduceat(diffs, indptr[:-1]) / counts
    r = lam * carpet.SUBDIVISION ** (-m)
    mass = carpet.NUM_CHILDREN ** (-m)
    return float(r ** (-d_w) * mass * per_vertex.sum())


def default_suite(m: int, p: float = 2.0, seeds=(11, 12, 13), graph=None) -> dict:
    """Named test functions at resolution m: smooth, rough, and p-harmonic."""
    x, y = carpet.cell_centers(m)
    suite = {"coord_x": x, "coord_y": y, "coord_xy": x * y}
    for s in seeds:
        rng = np.random.default_rng(s)
        suite[f"random_{s}"] = rng.uniform(size=carpet.NUM_CHILDREN**m)
    G = graph if graph is not None else build_graph(m)
    _, sol = capacity(G, carpet.face_codes(m, "L"), carpet.face_codes(m, "R"), None, p)
    suite["face_potential"] = sol.values.values
    return suite


def poincare_constant(
    n: int,
    p: float,
    d_w: float,
    suite: dict | None = None,
    ball_centers=None,
    R: int | None = None,
    graph=None,
):
    """Best empirical constant in the (p,p)-Poincare inequality of order d_w.

    For each ball B(x,R) and each test function: the ratio of
    sum_{y in B} |f(y) - f_B|^p to R^d_w * E_{p, B(x, 2R)}(f).  Returns the
    max ratio together with the attaining instance.
    """
    check_p(p)
    G = graph if graph is not None else build_graph(n)
    if suite is None:
        suite = default_suite(n, p, graph=G)
    if not suite:
        raise ValueError("empty test suite")
    if R is None:
        R = carpet.SUBDIVISION ** max(n - 2, 0)
    if ball_centers is None:
        ball_centers = [
            carpet.Word.from_digits([1] * n).code,
            carpet.Word.from_digits([2] * n).code,
            carpet.Word.from_digits([5] + [1] * (n - 1)).code,
            carpet.Word.from_digits([6] * n).code,
        ]
    best = 0.0
    attaining = None
    for c in ball_centers:
        dist = G.distances(c)
        ball = np.nonzero((dist >= 0) & (dist < R))[0]
        double = np.nonzero((dist >= 0) & (dist < 2 * R))[0]
        for name, f in suite.items():
            values = _values(f)
            inside = values[ball]
            lhs = float(np.sum(np.abs(inside - inside.mean()) ** p))
            rhs = R**d_w * p_energy(G, values, p, A=double)
            if rhs == 0:
                continue
            ratio = lhs / rhs
            if ratio > best:
                best = ratio
                attaining = {"center": int(c), "R": int(R), "function": name}
    return {"constant": best, "attaining": attaining, "p": p, "n": n, "d_w": d_w}
