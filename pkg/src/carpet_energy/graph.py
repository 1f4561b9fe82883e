"""Approximation graphs of the carpet and the discrete p-energy calculus.

The level-n graph has the 8^n level-n cells as vertices.  Two flavors share
one data structure: the *touching* graph joins cells whose closures
intersect (side or corner contact), the *edge-sharing* graph keeps only
side contact.  Corner-only edges carry a tag instead of a second graph.
"""

from __future__ import annotations

import os
import struct
import threading
from dataclasses import dataclass, field

import numpy as np

from . import carpet

DEFAULT_MAX_LEVEL = 7
MAX_LEVEL_ENV = "CARPET_ENERGY_MAX_LEVEL"

TOUCHING = "touching"
EDGE_SHARING = "edge_sharing"


def max_build_level() -> int:
    """Feasibility cap for graph construction; env override allowed."""
    value = os.environ.get(MAX_LEVEL_ENV)
    return int(value) if value else DEFAULT_MAX_LEVEL


@dataclass
class LevelGraph:
    """Immutable level-n approximation graph in CSR form.

    ``edges_u``/``edges_v`` list each edge once with u < v, sorted
    lexicographically; ``edge_is_corner`` tags corner-only contact.
    Neighbor lists are ascending in word encoding.
    """

    level: int
    flavor: str
    indptr: np.ndarray
    indices: np.ndarray
    neighbor_is_corner: np.ndarray
    edges_u: np.ndarray
    edges_v: np.ndarray
    edge_is_corner: np.ndarray
    _dist_cache: dict = field(default_factory=dict, repr=False)
    _dist_lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def n_vertices(self) -> int:
        return carpet.NUM_CHILDREN**self.level

    @property
    def n_edges(self) -> int:
        return len(self.edges_u)

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, x: int) -> np.ndarray:
        return self.indices[self.indptr[x]:self.indptr[x + 1]]

    def adjacency_matrix(self):
        from scipy import sparse

        n = self.n_vertices
        u, v = self.edges_u, self.edges_v
        data = np.ones(2 * len(u))
        return sparse.csr_matrix(
            (data, (np.concatenate([u, v]), np.concatenate([v, u]))), shape=(n, n)
        )

    def distances(self, source: int) -> np.ndarray:
        """BFS distance from ``source`` to every vertex (memoized)."""
        with self._dist_lock:
            hit = self._dist_cache.get(source)
        if hit is not None:
            return hit
        dist = _bfs(self.indptr, self.indices, self.n_vertices, np.array([source]))
        dist.setflags(write=False)
        with self._dist_lock:
            self._dist_cache[source] = dist
        return dist


def _bfs(indptr, indices, n, sources):
    dist = np.full(n, -1, dtype=np.int32)
    dist[sources] = 0
    frontier = np.asarray(sources, dtype=np.int64)
    d = 0
    while len(frontier):
        nbrs = _gather_neighbors(indptr, indices, frontier)
        nbrs = nbrs[dist[nbrs] < 0]
        if len(nbrs) == 0:
            break
        frontier = np.unique(nbrs)
        d += 1
        dist[frontier] = d
    return dist


def _gather_neighbors(indptr, indices, frontier):
    counts = indptr[frontier + 1] - indptr[frontier]
    total = int(counts.sum())
    if total == 0:
        return np.empty(0, dtype=indices.dtype)
    base = np.repeat(indptr[frontier], counts)
    offset = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
    return indices[base + offset]


def build_graph(n: int, flavor: str = TOUCHING) -> LevelGraph:
    """Construct the level-n graph in either flavor.

    Adjacency is decided on integer box coordinates (never floats): side
    contact is Chebyshev distance 1 along an axis, corner contact is a
    diagonal offset.
    """
    cap = max_build_level()
    if not 1 <= n <= cap:
        raise ValueError(f"level {n} outside 1..{cap} (set {MAX_LEVEL_ENV} to raise)")
    if flavor not in (TOUCHING, EDGE_SHARING):
        raise ValueError(f"flavor must be {TOUCHING!r} or {EDGE_SHARING!r}")

    cols, rows = carpet.level_boxes(n)
    grid = carpet.SUBDIVISION**n
    keys = cols * grid + rows
    order = np.argsort(keys)
    sorted_keys = keys[order]

    side_offsets = ((1, 0), (0, 1))
    corner_offsets = ((1, 1), (1, -1))
    offsets = side_offsets if flavor == EDGE_SHARING else side_offsets + corner_offsets

    us, vs, tags = [], [], []
    for dx, dy in offsets:
        nc, nr = cols + dx, rows + dy
        ok = (nc >= 0) & (nc < grid) & (nr >= 0) & (nr < grid)
        cand = nc[ok] * grid + nr[ok]
        pos = np.searchsorted(sorted_keys, cand)
        pos[pos == len(sorted_keys)] = 0
        found = sorted_keys[pos] == cand
        u = np.nonzero(ok)[0][found]
        v = order[pos[found]]
        us.append(u)
        vs.append(v)
        tags.append(np.full(len(u), (dx, dy) in corner_offsets, dtype=bool))

    u = np.concatenate(us)
    v = np.concatenate(vs)
    tag = np.concatenate(tags)
    lo, hi = np.minimum(u, v), np.maximum(u, v)
    perm = np.lexsort((hi, lo))
    edges_u, edges_v, edge_is_corner = lo[perm], hi[perm], tag[perm]

    n_vertices = carpet.NUM_CHILDREN**n
    ends = np.concatenate([edges_u, edges_v])
    others = np.concatenate([edges_v, edges_u])
    corner2 = np.concatenate([edge_is_corner, edge_is_corner])
    counts = np.bincount(ends, minlength=n_vertices)
    indptr = np.zeros(n_vertices + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    perm2 = np.lexsort((others, ends))
    indices = others[perm2]
    neighbor_is_corner = corner2[perm2]

    for arr in (edges_u, edges_v, edge_is_corner, indptr, indices, neighbor_is_corner):
        arr.setflags(write=False)
    return LevelGraph(
        level=n,
        flavor=flavor,
        indptr=indptr,
        indices=indices,
        neighbor_is_corner=neighbor_is_corner,
        edges_u=edges_u,
        edges_v=edges_v,
        edge_is_corner=edge_is_corner,
    )


def graph_ball(G: LevelGraph, center: int, radius: float) -> np.ndarray:
    """Open metric ball {y : d(center,y) < radius}, sorted by encoding."""
    if not 0 <= center < G.n_vertices:
        raise ValueError(f"vertex {center} outside graph of level {G.level}")
    dist = G.distances(center)
    return np.nonzero((dist >= 0) & (dist < radius))[0]


def _values(f) -> np.ndarray:
    values = getattr(f, "values", f)
    return np.asarray(values, dtype=np.float64)


def _edge_mask(G: LevelGraph, A) -> np.ndarray | None:
    if A is None:
        return None
    member = np.zeros(G.n_vertices, dtype=bool)
    member[np.asarray(A)] = True
    return member[G.edges_u] & member[G.edges_v]


def p_energy(G: LevelGraph, f, p: float, A=None) -> float:
    """Discrete p-energy: sum over edges within A of |f(x)-f(y)|^p."""
    if p <= 1:
        raise ValueError("p must exceed 1")
    values = _values(f)
    diff = np.abs(values[G.edges_u] - values[G.edges_v])
    mask = _edge_mask(G, A)
    if mask is not None:
        diff = diff[mask]
    return float(np.sum(diff**p))


def p_energy_form(G: LevelGraph, f, g, p: float, A=None) -> float:
    """Two-variable energy form: the Gateaux pairing of the p-energy.

    Sum over edges within A of sgn(f(y)-f(x))|f(y)-f(x)|^(p-1)(g(y)-g(x));
    the term is symmetric in the edge orientation, and the diagonal
    reproduces the p-energy: form(f, f) = p_energy(f).
    """
    fv, gv = _values(f), _values(g)
    df = fv[G.edges_v] - fv[G.edges_u]
    dg = gv[G.edges_v] - gv[G.edges_u]
    terms = np.sign(df) * np.abs(df) ** (p - 1) * dg
    mask = _edge_mask(G, A)
    if mask is not None:
        terms = terms[mask]
    return float(np.sum(terms))


def p_laplacian(G: LevelGraph, f, p: float, x: int) -> float:
    """Degree-normalized p-Laplacian at one vertex."""
    values = _values(f)
    if not 0 <= x < G.n_vertices:
        raise ValueError(f"vertex {x} outside graph of level {G.level}")
    nbrs = G.neighbors(x)
    d = values[nbrs] - values[x]
    return float(np.sum(np.sign(d) * np.abs(d) ** (p - 1)) / len(nbrs))


def p_laplacian_all(G: LevelGraph, f, p: float) -> np.ndarray:
    """Vector of p-Laplacian values at every vertex."""
    values = _values(f)
    d = values[G.edges_v] - values[G.edges_u]
    flow = np.sign(d) * np.abs(d) ** (p - 1)
    n = G.n_vertices
    acc = np.bincount(G.edges_u, weights=flow, minlength=n) - np.bincount(
        G.edges_v, weights=flow, minlength=n
    )
    return acc / np.maximum(G.degrees(), 1)


def coarsen(f, level_from: int, level_to: int) -> np.ndarray:
    """Cell averages at a coarser level (conditional expectation).

    Implemented as repeated one-level means over the 8 children, so the
    tower property coarsen(coarsen(f, l), k) == coarsen(f, k) holds bitwise.
    """
    if level_to > level_from:
        raise ValueError(f"cannot coarsen level {level_from} to finer {level_to}")
    values = _values(f)
    if len(values) != carpet.NUM_CHILDREN**level_from:
        raise ValueError("value count does not match 8^level")
    for _ in range(level_from - level_to):
        values = values.reshape(-1, carpet.NUM_CHILDREN).mean(axis=1)
    return values


@dataclass(frozen=True)
class GraphFunction:
    """One real value per level-n vertex, in word-encoding order."""

    level: int
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (carpet.NUM_CHILDREN**self.level,):
            raise ValueError("value count does not match 8^level")
        if not np.all(np.isfinite(values)):
            raise ValueError("values must be finite")
        object.__setattr__(self, "values", values)


_MAGIC = b"CEF1"


def save_function(path: str, f, fmt: str = "text") -> None:
    """Write a GraphFunction (or CellFunction, which shares the formats):
    text header format or compact binary."""
    level = getattr(f, "level", None)
    if level is None:
        level = f.resolution
    values = np.asarray(f.values, dtype=np.float64)
    if fmt == "text":
        with open(path, "w") as fh:
            fh.write(f"level={level} count={len(values)}\n")
            for x in values:
                fh.write(repr(float(x)) + "\n")
    elif fmt == "binary":
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(struct.pack("<I", level))
            fh.write(values.astype("<f8").tobytes())
    else:
        raise ValueError(f"unknown format {fmt!r}")


def load_function(path: str) -> GraphFunction:
    """Read either GraphFunction format (sniffs the binary magic)."""
    with open(path, "rb") as fh:
        head = fh.read(4)
        if head == _MAGIC:
            (level,) = struct.unpack("<I", fh.read(4))
            values = np.frombuffer(fh.read(), dtype="<f8")
            return GraphFunction(level, values.copy())
    with open(path) as fh:
        header = fh.readline().strip()
        fields = dict(part.split("=") for part in header.split())
        level, count = int(fields["level"]), int(fields["count"])
        values = np.array([float(fh.readline()) for _ in range(count)])
    return GraphFunction(level, values)
