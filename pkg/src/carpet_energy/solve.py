"""Convex solvers: p-harmonic Dirichlet problems, capacities, and
combinatorial vertex p-modulus by constraint generation.

The Dirichlet solver minimizes the p-energy over the subgraph induced by
``domain | boundary``.  p = 2 is a sparse linear solve; other p run Newton
with smoothing continuation (the energy of sqrt(d^2 + eps^2) for shrinking
eps), warm-started from the p = 2 solution, with Armijo backtracking.  All
iterates are clamped to the boundary range, so the comparison principle
holds exactly on output.  A cyclic coordinate-descent solver with a
safeguarded per-vertex Newton is kept for cross-checks and as a fallback.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import spsolve

from .graph import GraphFunction, LevelGraph

P_MIN, P_MAX = 1.05, 16.0
_DIRECT_SOLVE_LIMIT = 4000


def check_p(p: float) -> float:
    p = float(p)
    if not P_MIN <= p <= P_MAX:
        raise ValueError(f"p={p} outside the supported range [{P_MIN}, {P_MAX}]")
    return p


@dataclass
class DirichletProblem:
    graph: LevelGraph
    p: float
    boundary: dict
    domain: np.ndarray
    residual_tol: float = 1e-10  # relative to the boundary oscillation
    energy_rel_tol: float = 1e-12
    max_iters: int = 100_000


@dataclass
class PotentialSolution:
    values: GraphFunction
    energy: float
    residual: float
    iterations: int
    converged: bool
    support: np.ndarray = None
    energy_trace: list = field(default_factory=list)


class _Induced:
    """Subgraph induced on A2, with local contiguous indices."""

    def __init__(self, G: LevelGraph, A2):
        if A2 is None:
            self.vertices = np.arange(G.n_vertices)
            self.eu, self.ev = G.edges_u, G.edges_v
        else:
            self.vertices = np.unique(np.asarray(A2, dtype=np.int64))
            member = np.zeros(G.n_vertices, dtype=bool)
            member[self.vertices] = True
            keep = member[G.edges_u] & member[G.edges_v]
            local = np.full(G.n_vertices, -1, dtype=np.int64)
            local[self.vertices] = np.arange(len(self.vertices))
            self.eu = local[G.edges_u[keep]]
            self.ev = local[G.edges_v[keep]]
        self.n = len(self.vertices)
        self.deg = np.bincount(self.eu, minlength=self.n) + np.bincount(
            self.ev, minlength=self.n
        )

    def local_of(self, global_idx):
        lookup = np.full(int(self.vertices.max(initial=0)) + 1, -1, dtype=np.int64)
        lookup[self.vertices] = np.arange(self.n)
        out = lookup[np.asarray(global_idx, dtype=np.int64)]
        if np.any(out < 0):
            raise ValueError("vertex outside A2")
        return out

    def is_connected(self) -> bool:
        from scipy.sparse.csgraph import connected_components

        if self.n == 0:
            return True
        adj = sparse.coo_matrix(
            (np.ones(len(self.eu)), (self.eu, self.ev)), shape=(self.n, self.n)
        )
        ncomp, _ = connected_components(adj, directed=False)
        return ncomp == 1


def _energy(eu, ev, u, p):
    return float(np.sum(np.abs(u[eu] - u[ev]) ** p))


def _accumulate(eu, ev, flow, n):
    return np.bincount(eu, weights=flow, minlength=n) - np.bincount(
        ev, weights=flow, minlength=n
    )


def _raw_residual(eu, ev, u, p, n):
    """Unnormalized residual: deg(x) * Delta_p(x)."""
    d = u[ev] - u[eu]
    flow = np.sign(d) * np.abs(d) ** (p - 1)
    return _accumulate(eu, ev, flow, n)


def _laplacian(eu, ev, weights, n):
    rows = np.concatenate([eu, ev, eu, ev])
    cols = np.concatenate([ev, eu, eu, ev])
    vals = np.concatenate([-weights, -weights, weights, weights])
    return sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))


def _preconditioner(A):
    if A.shape[0] <= _DIRECT_SOLVE_LIMIT:
        return None
    import pyamg

    return pyamg.ruge_stuben_solver(A.tocsr())


def _solve_spd(A, b, x0=None, rtol=1e-12, precond=None):
    """Deterministic SPD solve: direct for small, AMG-CG for large.

    ``precond`` may be a pyamg hierarchy built from a nearby matrix; CG
    then runs on the current matrix with that hierarchy as preconditioner.
    """
    n = A.shape[0]
    if n <= _DIRECT_SOLVE_LIMIT:
        return spsolve(A.tocsc(), b)
    import pyamg
    from scipy.sparse.linalg import cg

    if precond is None:
        ml = pyamg.ruge_stuben_solver(A.tocsr())
        return ml.solve(b, x0=x0, tol=rtol, accel="cg", maxiter=400)
    x, _ = cg(A, b, x0=x0, rtol=rtol, atol=0.0, maxiter=400,
              M=precond.aspreconditioner())
    return x


def _linear_harmonic(eu, ev, n, fixed_idx, fixed_vals, free_idx, rtol=1e-13):
    """p = 2 solution on the induced subgraph (unit edge weights)."""
    u = np.zeros(n)
    u[fixed_idx] = fixed_vals
    if len(free_idx) == 0:
        return u
    L = _laplacian(eu, ev, np.ones(len(eu)), n)
    rhs = -(L @ u)[free_idx]
    Lff = L[free_idx][:, free_idx]
    guess = np.full(len(free_idx), float(np.mean(fixed_vals)))
    u[free_idx] = _solve_spd(Lff, rhs, x0=guess, rtol=rtol)
    return u


def solve_p_harmonic(prob: DirichletProblem) -> PotentialSolution:
    """Minimize the p-energy over domain ∪ boundary with fixed boundary data."""
    p = check_p(prob.p)
    G = prob.graph
    bidx = np.asarray(sorted(prob.boundary), dtype=np.int64)
    bvals = np.array([prob.boundary[int(i)] for i in bidx], dtype=np.float64)
    domain = np.unique(np.asarray(prob.domain, dtype=np.int64))
    if len(np.intersect1d(bidx, domain)):
        raise ValueError("boundary and domain overlap")
    if len(bidx) == 0:
        raise ValueError("empty boundary")

    A2 = np.union1d(bidx, domain)
    sub = _Induced(G, A2)
    if not sub.is_connected():
        raise ValueError("domain ∪ boundary is disconnected")
    fixed = sub.local_of(bidx)
    free = sub.local_of(domain)

    def finish(u_local, iterations, trace):
        res = 0.0
        if len(free):
            raw = _raw_residual(sub.eu, sub.ev, u_local, p, sub.n)
            res = float(np.max(np.abs(raw[free] / np.maximum(sub.deg[free], 1))))
        energy = _energy(sub.eu, sub.ev, u_local, p)
        full = np.zeros(G.n_vertices)
        full[sub.vertices] = u_local
        osc = float(bvals.max() - bvals.min()) if len(bvals) else 0.0
        stop = max(
            prob.residual_tol * osc,
            residual_floor(p, osc, u_local[sub.ev] - u_local[sub.eu]),
        )
        return PotentialSolution(
            values=GraphFunction(G.level, full),
            energy=energy,
            residual=res,
            iterations=iterations,
            converged=res <= stop or len(free) == 0 or osc == 0.0,
            support=sub.vertices,
            energy_trace=trace,
        )

    lo, hi = float(bvals.min()), float(bvals.max())
    if len(free) == 0 or hi == lo:
        u = np.full(sub.n, lo)
        u[fixed] = bvals
        return finish(u, 0, [])

    tol_abs = prob.residual_tol * (hi - lo)
    u = _linear_harmonic(sub.eu, sub.ev, sub.n, fixed, bvals, free)
    np.clip(u, lo, hi, out=u)
    if p == 2.0:
        return finish(u, 1, [_energy(sub.eu, sub.ev, u, 2.0)])

    u, iterations, trace = _smoothed_newton(
        sub, u, p, free, lo, hi, tol_abs, prob.max_iters
    )
    return finish(u, iterations, trace)


def residual_floor(p: float, osc: float, d_edges=None) -> float:
    """Attainable max-residual in float64.

    Rounding the values perturbs each edge flow by about
    (p-1)(|d| + eta)^(p-2) * eta with eta = machine eps * oscillation; for
    p < 2 the exponent is negative and edges with tiny nonzero differences
    dominate, so residual tolerances below this floor cannot be met.
    """
    eta = np.finfo(float).eps * osc
    if eta == 0.0:
        return 0.0
    if d_edges is None or len(d_edges) == 0:
        dmin = eta
    else:
        mags = np.abs(d_edges)
        mags = mags[mags > 0]
        dmin = max(float(mags.min()) if len(mags) else osc, eta)
    base = dmin if p < 2 else osc
    return 8.0 * abs(p - 1.0) * eta * base ** (p - 2.0)


def _smoothed_newton(sub, u, p, free, lo, hi, tol_abs, max_iters):
    """Newton with smoothing continuation on sum (d^2+eps^2)^(p/2).

    Each eps-stage is smooth and strongly convex, so Newton with Armijo
    backtracking converges in a handful of steps; eps shrinks geometrically
    until the true residual meets the tolerance or its float64 floor.
    """
    eu, ev, n = sub.eu, sub.ev, sub.n
    u = u.copy()
    osc = hi - lo
    trace = [_energy(eu, ev, u, p)]
    degf = np.maximum(sub.deg[free], 1)
    iterations = 0

    def true_maxres(uu):
        raw = _raw_residual(eu, ev, uu, p, n)
        return float(np.max(np.abs(raw[free] / degf)))

    d = u[ev] - u[eu]
    eps = 0.1 * max(float(np.max(np.abs(d))), 1e-6 * osc)
    eps_min = 1e-24 * osc
    # optimize a little past the requested tolerance (large p has tiny flows,
    # so the absolute tolerance alone would accept the warm start untouched)
    stop = max(1e-3 * tol_abs, residual_floor(p, osc, d))
    ml = None
    while iterations < max_iters:
        stage_done = False
        for _ in range(30):
            if iterations >= max_iters:
                break
            iterations += 1
            d = u[ev] - u[eu]
            if true_maxres(u) <= stop:
                trace.append(_energy(eu, ev, u, p))
                return u, iterations, trace
            s = d * d + eps * eps
            flow = d * s ** ((p - 2) / 2)
            raw = _accumulate(eu, ev, flow, n)
            grad = -p * raw[free]
            w = s ** ((p - 2) / 2) * (1.0 + (p - 2.0) * d * d / s)
            H = p * _laplacian(eu, ev, w, n)
            Hff = H[free][:, free] + sparse.identity(len(free)) * (
                1e-13 * p * float(np.max(w))
            )
            if ml is None:
                ml = _preconditioner(Hff)
            delta = _solve_spd(Hff, -grad, rtol=1e-10, precond=ml)
            slope = float(np.dot(grad, delta))
            e0 = float(np.sum(s ** (p / 2)))
            t = 1.0
            accepted = None
            while t > 1e-14:
                cand = u.copy()
                cand[free] += t * delta
                np.clip(cand, lo, hi, out=cand)
                dc = cand[ev] - cand[eu]
                e1 = float(np.sum((dc * dc + eps * eps) ** (p / 2)))
                if e1 <= e0 + 1e-4 * t * min(slope, 0.0):
                    accepted = cand
                    break
                t *= 0.5
            if accepted is None:
                stage_done = True
                break
            u = accepted
            trace.append(_energy(eu, ev, u, p))
            # smoothed problem solved to stage accuracy: shrink eps
            step = float(np.max(np.abs(t * delta))) if len(delta) else 0.0
            if step <= max(1e-3 * eps, 1e-15 * osc):
                stage_done = True
                break
        if not stage_done and iterations >= max_iters:
            break
        if eps <= eps_min:
            break
        eps = max(eps / 30.0, eps_min)
        ml = None
    trace.append(_energy(eu, ev, u, p))
    return u, iterations, trace


def _neighbor_lists(sub):
    order = np.argsort(np.concatenate([sub.eu, sub.ev]), kind="stable")
    ends = np.concatenate([sub.eu, sub.ev])[order]
    other = np.concatenate([sub.ev, sub.eu])[order]
    indptr = np.zeros(sub.n + 1, dtype=np.int64)
    np.cumsum(np.bincount(ends, minlength=sub.n), out=indptr[1:])
    return indptr, other


def _cd_sweep(sub, u, p, free, lo, hi, sweeps=1):
    """Cyclic coordinate descent: exact 1-D minimization per domain vertex.

    The 1-D derivative h(t) = sum sgn(t - f_y)|t - f_y|^(p-1) is strictly
    increasing; its root is found by bisection-safeguarded Newton inside
    the neighbor bracket.
    """
    indptr, nbr = _neighbor_lists(sub)
    u = u.copy()
    for _ in range(sweeps):
        for x in free:
            vals = u[nbr[indptr[x]:indptr[x + 1]]]
            if len(vals) == 0:
                continue
            a, b = float(vals.min()), float(vals.max())
            if a == b:
                u[x] = a
                continue
            t = min(max(float(u[x]), a), b)
            for _ in range(80):
                d = t - vals
                h = float(np.sum(np.sign(d) * np.abs(d) ** (p - 1)))
                if h > 0:
                    b = t
                else:
                    a = t
                if b - a <= 1e-16 * max(abs(a), abs(b), 1.0):
                    break
                hp = float((p - 1) * np.sum(np.abs(d) ** (p - 2))) if p >= 2 else 0.0
                if hp > 0 and np.isfinite(hp):
                    t_new = t - h / hp
                else:
                    t_new = 0.5 * (a + b)
                if not a < t_new < b:
                    t_new = 0.5 * (a + b)
                t = t_new
            u[x] = min(max(t, lo), hi)
    return u


def coordinate_descent(prob: DirichletProblem, sweeps: int) -> PotentialSolution:
    """Plain cyclic coordinate descent for cross-checks on small instances."""
    p = check_p(prob.p)
    G = prob.graph
    bidx = np.asarray(sorted(prob.boundary), dtype=np.int64)
    bvals = np.array([prob.boundary[int(i)] for i in bidx], dtype=np.float64)
    domain = np.unique(np.asarray(prob.domain, dtype=np.int64))
    A2 = np.union1d(bidx, domain)
    sub = _Induced(G, A2)
    fixed = sub.local_of(bidx)
    free = sub.local_of(domain)
    lo, hi = float(bvals.min()), float(bvals.max())
    u = np.full(sub.n, float(np.mean(bvals)))
    u[fixed] = bvals
    trace = [_energy(sub.eu, sub.ev, u, p)]
    for _ in range(sweeps):
        u = _cd_sweep(sub, u, p, free, lo, hi)
        trace.append(_energy(sub.eu, sub.ev, u, p))
    raw = _raw_residual(sub.eu, sub.ev, u, p, sub.n)
    res = float(np.max(np.abs(raw[free] / np.maximum(sub.deg[free], 1)))) if len(free) else 0.0
    full = np.zeros(G.n_vertices)
    full[sub.vertices] = u
    tol_abs = prob.residual_tol * (hi - lo)
    return PotentialSolution(
        values=GraphFunction(G.level, full),
        energy=trace[-1],
        residual=res,
        iterations=sweeps,
        converged=res <= tol_abs,
        support=sub.vertices,
        energy_trace=trace,
    )


def capacity(G: LevelGraph, A0, A1, A2=None, p: float = 2.0, **tols):
    """p-capacity between A0 (potential 0) and A1 (potential 1) within A2.

    Returns ``(value, PotentialSolution)``; the solution is the equilibrium
    potential, p-harmonic off the plates.
    """
    A0 = np.unique(np.asarray(A0, dtype=np.int64))
    A1 = np.unique(np.asarray(A1, dtype=np.int64))
    if len(A0) == 0 or len(A1) == 0:
        raise ValueError("capacity plates must be nonempty")
    if len(np.intersect1d(A0, A1)):
        raise ValueError("capacity plates overlap")
    if A2 is None:
        A2 = np.arange(G.n_vertices)
    A2 = np.union1d(np.asarray(A2, dtype=np.int64), np.union1d(A0, A1))
    domain = np.setdiff1d(A2, np.union1d(A0, A1))
    boundary = {int(i): 0.0 for i in A0}
    boundary.update({int(i): 1.0 for i in A1})
    prob = DirichletProblem(graph=G, p=p, boundary=boundary, domain=domain, **tols)
    sol = solve_p_harmonic(prob)
    return sol.energy, sol


def shortest_vertex_weighted_path(G: LevelGraph, rho, A0, A1, A2=None):
    """Minimizing path for the vertex-weighted length sum(rho over vertices).

    Both endpoints count.  Deterministic: the heap orders by (length,
    vertex encoding) and ties prefer the smaller predecessor.
    """
    rho = np.asarray(rho, dtype=np.float64)
    if np.any(rho < 0):
        raise ValueError("rho must be nonnegative")
    allowed = np.zeros(G.n_vertices, dtype=bool)
    if A2 is None:
        allowed[:] = True
    else:
        allowed[np.asarray(A2, dtype=np.int64)] = True
    targets = np.zeros(G.n_vertices, dtype=bool)
    A1 = np.asarray(A1, dtype=np.int64)
    targets[A1[allowed[A1]]] = True

    dist = {}
    parent = {}
    heap = []
    for a in sorted(int(x) for x in np.asarray(A0, dtype=np.int64)):
        if allowed[a]:
            d = float(rho[a])
            if d < dist.get(a, np.inf):
                dist[a] = d
                parent[a] = -1
                heapq.heappush(heap, (d, a))
    settled = set()
    while heap:
        d, x = heapq.heappop(heap)
        if x in settled or d > dist.get(x, np.inf):
            continue
        settled.add(x)
        if targets[x]:
            path = [x]
            while parent[path[-1]] != -1:
                path.append(parent[path[-1]])
            path.reverse()
            return path, d
        for y in G.neighbors(x):
            y = int(y)
            if not allowed[y] or y in settled:
                continue
            cand = d + float(rho[y])
            if cand < dist.get(y, np.inf):
                dist[y] = cand
                parent[y] = x
                heapq.heappush(heap, (cand, y))
            elif cand == dist.get(y, np.inf) and x < parent.get(y, np.inf):
                parent[y] = x
    raise ValueError("no path between the plates inside A2")


def _lambda_root(s_rest, p, exponent):
    """Solve sum(((s_rest + l)/p)^exponent) = 1 for l >= 0.

    The left side is strictly increasing in l; bisection-safeguarded Newton
    on the bracket [0, p].
    """
    total = float(np.sum((s_rest / p) ** exponent))
    if total >= 1.0:
        return 0.0
    lo, hi = 0.0, p
    l = min(p * (1.0 / len(s_rest)) ** (p - 1.0), p)
    for _ in range(80):
        base = (s_rest + l) / p
        val = float(np.sum(base**exponent)) - 1.0
        if abs(val) <= 1e-15:
            return l
        if val > 0.0:
            hi = l
        else:
            lo = l
        if hi - lo <= 1e-16 * p:
            break
        with np.errstate(divide="ignore", over="ignore"):
            deriv = (exponent / p) * float(np.sum(base ** (exponent - 1.0)))
        if np.isfinite(deriv) and deriv > 0.0:
            cand = l - val / deriv
        else:
            cand = 0.5 * (lo + hi)
        l = cand if lo < cand < hi else 0.5 * (lo + hi)
    return l


@dataclass
class ModulusResult:
    value: float
    rho: np.ndarray
    certificate_gap: float
    active_paths: list
    converged: bool
    lower_bound: float
    upper_bound: float


def vertex_modulus(
    G: LevelGraph,
    A0,
    A1,
    A2=None,
    p: float = 2.0,
    eps_path: float = 1e-6,
    max_rounds: int = 10_000,
    inner_tol: float = 1e-12,
) -> ModulusResult:
    """Combinatorial p-modulus of all A0 -> A1 paths inside A2.

    Constraint generation: the restricted problem min sum rho^p subject to
    L_rho(theta_i) >= 1 over the active paths is solved by dual coordinate
    ascent with the KKT closed form rho(v) = (sum_i lambda_i / p)^(1/(p-1));
    the separation oracle is the rho-shortest path.  Terminates when the
    shortest path has rho-length >= 1 - eps_path, which certifies the bound
    pair [dual value, objective / length^p].
    """
    p = check_p(p)
    A0 = np.unique(np.asarray(A0, dtype=np.int64))
    A1 = np.unique(np.asarray(A1, dtype=np.int64))
    if len(A0) == 0 or len(A1) == 0 or len(np.intersect1d(A0, A1)):
        raise ValueError("plates must be nonempty and disjoint")

    n = G.n_vertices
    active: list = []
    lam = np.zeros(0)
    exponent = 1.0 / (p - 1.0)

    def rho_of(svec):
        return (np.maximum(svec, 0.0) / p) ** exponent

    def incidence():
        rows = np.repeat(np.arange(len(active)), [len(t) for t in active])
        cols = np.concatenate(active) if active else np.zeros(0, dtype=np.int64)
        return sparse.csr_matrix(
            (np.ones(len(cols)), (rows, cols)), shape=(len(active), n)
        )

    def dual_solve(A, lam0, gtol):
        from scipy.optimize import minimize

        def neg(lmbda):
            s = A.T @ lmbda
            s = np.maximum(s, 0.0)
            g = lmbda.sum() - (p - 1.0) * float(np.sum((s / p) ** (exponent * p)))
            grad = 1.0 - A @ rho_of(s)
            return -g, -grad

        out = minimize(
            neg, lam0, jac=True, method="L-BFGS-B",
            bounds=[(0.0, None)] * len(lam0),
            options={"maxiter": 800, "ftol": 1e-18, "gtol": gtol},
        )
        return np.maximum(out.x, 0.0)

    def polish(s, lam, sweeps):
        # exact 1-D maximization per multiplier restores complementarity
        for _ in range(sweeps):
            biggest = 0.0
            for i, theta in enumerate(active):
                s_rest = np.maximum(s[theta] - lam[i], 0.0)
                new = _lambda_root(s_rest, p, exponent)
                if new != lam[i]:
                    s[theta] += new - lam[i]
                    biggest = max(biggest, abs(new - lam[i]))
                    lam[i] = new
            if biggest <= inner_tol * max(float(lam.max(initial=0.0)), 1.0):
                break
        return s, lam

    def violated_paths(rho, limit=64):
        # vertex-disjoint bundle of short paths (banning used vertices)
        paths = []
        allowed = np.ones(n, dtype=bool)
        if A2 is not None:
            allowed[:] = False
            allowed[np.asarray(A2, dtype=np.int64)] = True
        first = None
        while len(paths) < limit:
            try:
                path, ell = shortest_vertex_weighted_path(
                    G, rho, A0, A1, np.nonzero(allowed)[0]
                )
            except ValueError:
                break
            if first is None:
                first = ell
            if ell >= 1.0 - eps_path:
                break
            paths.append(np.array(path, dtype=np.int64))
            allowed[path] = False
        return paths, first

    converged = False
    ell = 0.0
    s = np.zeros(n)
    for round_no in range(max_rounds):
        rho = rho_of(s)
        try:
            path, ell = shortest_vertex_weighted_path(G, rho, A0, A1, A2)
        except ValueError:
            if active:
                raise
            # empty path family: the modulus is zero
            return ModulusResult(
                value=0.0, rho=rho, certificate_gap=0.0, active_paths=[],
                converged=True, lower_bound=0.0, upper_bound=0.0,
            )
        if ell >= 1.0 - eps_path:
            converged = True
            break
        new_paths, _ = violated_paths(rho)
        if not new_paths:
            new_paths = [np.array(path, dtype=np.int64)]
        active.extend(new_paths)
        lam = np.concatenate([lam, np.zeros(len(new_paths))])
        A = incidence()
        gtol = 1e-10 if round_no > 4 else 1e-7
        lam = dual_solve(A, lam, gtol)
        s = np.maximum(np.asarray(A.T @ lam).ravel(), 0.0)
        s, lam = polish(s, lam, sweeps=3)

    if active:
        s, lam = polish(s, lam, sweeps=3)
        rho = rho_of(s)
        path, ell = shortest_vertex_weighted_path(G, rho, A0, A1, A2)
        converged = ell >= 1.0 - eps_path
    rho = rho_of(s)
    value = float(np.sum(rho**p))
    dual = float(
        lam.sum()
        - (p - 1.0) * float(np.sum((np.maximum(s, 0.0) / p) ** (exponent * p)))
    )
    upper = value / ell**p if ell > 0 else np.inf
    return ModulusResult(
        value=value,
        rho=rho,
        certificate_gap=1.0 - ell,
        active_paths=active,
        converged=converged,
        lower_bound=dual,
        upper_bound=upper,
    )
