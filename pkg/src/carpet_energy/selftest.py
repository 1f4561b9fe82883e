"""Exact-oracle self test: closed forms on the level-1 graph, consistency
identities, and symmetry checks.  Everything here has a hand-checkable
expected value."""

from __future__ import annotations

import numpy as np

from . import carpet, emeasure, graph, solve


def _check(name: str, ok: bool, detail: str = "") -> tuple:
    return (name, bool(ok), detail)


def run_checks() -> list:
    checks = []
    G1 = graph.build_graph(1)
    G1s = graph.build_graph(1, "edge_sharing")

    checks.append(_check(
        "G1 enumeration",
        G1.n_vertices == 8
        and G1.n_edges == 12
        and G1s.n_edges == 8
        and sorted(G1.degrees().tolist()) == [2, 2, 2, 2, 4, 4, 4, 4],
        f"V={G1.n_vertices} E={G1.n_edges} E#={G1s.n_edges}",
    ))

    corner_pairs = {
        tuple(sorted((int(u) + 1, int(v) + 1)))
        for u, v, c in zip(G1.edges_u, G1.edges_v, G1.edge_is_corner)
        if c
    }
    checks.append(_check(
        "G1 corner edges", corner_pairs == {(2, 4), (2, 8), (4, 6), (6, 8)},
        str(sorted(corner_pairs)),
    ))

    left = carpet.face_codes(1, "L")
    right = carpet.face_codes(1, "R")
    ok = True
    detail = []
    for p in (1.5, 2.0, 2.5, 3.0):
        value, sol = solve.capacity(G1, left, right, None, p)
        expect = 2.0 ** (3 - p)
        mid = sol.values.values[[1, 5]]  # words "2" and "6"
        ok &= abs(value - expect) <= 1e-8 * expect
        ok &= np.allclose(mid, 0.5, atol=1e-8)
        detail.append(f"p={p}: {value:.12g} vs {expect:.12g}")
    checks.append(_check("G1 face capacity 2^(3-p)", ok, "; ".join(detail)))

    ok = True
    detail = []
    for p in (1.5, 2.0, 3.0):
        res = solve.vertex_modulus(G1, [0], [1], [0, 1], p)
        expect = 2.0 ** (1 - p)
        ok &= abs(res.value - expect) <= 1e-6 * expect
        detail.append(f"p={p}: {res.value:.12g} vs {expect:.12g}")
    checks.append(_check("single-edge modulus 2^(1-p)", ok, "; ".join(detail)))

    rng = np.random.default_rng(1)
    f3 = rng.uniform(size=8**3)
    via4 = graph.coarsen(graph.coarsen(f3, 3, 2), 2, 1)
    direct = graph.coarsen(f3, 3, 1)
    checks.append(_check(
        "coarsen tower property", np.array_equal(via4, direct), "bitwise"))

    G3 = graph.build_graph(3)
    p, rho = 2.0, 1.25
    t1 = emeasure.energy_measure_table(f3, p, rho, 1, graph=G3)
    t2 = emeasure.energy_measure_table(f3, p, rho, 2, graph=G3)
    total = rho**3 * graph.p_energy(G3, f3, p)
    cons = emeasure.consistency_check(t1, t2)
    checks.append(_check(
        "energy-measure totals",
        abs(t1.total - total) <= 1e-12 * total
        and abs(t2.total - total) <= 1e-12 * total
        and np.all(cons["per_cell"] >= -1e-15 * total),
        f"total={total:.12g}",
    ))

    err = max(
        emeasure.symmetry_pushforward_check(f3, phi, p, rho, 1, graph=G3)
        for phi in carpet.D4
    )
    checks.append(_check("D4 pushforward", err <= 1e-12, f"max rel err {err:.2e}"))

    energies = {
        str(phi): graph.p_energy(G3, f3[carpet.symmetry_codes(phi, 3)], 2.5)
        for phi in carpet.D4
    }
    base = graph.p_energy(G3, f3, 2.5)
    worst = max(abs(e - base) / base for e in energies.values())
    checks.append(_check("D4 energy invariance", worst <= 1e-12, f"{worst:.2e}"))

    return checks


def run_selftest(verbose: bool = False) -> bool:
    checks = run_checks()
    width = max(len(name) for name, _, _ in checks)
    ok_all = True
    for name, ok, detail in checks:
        ok_all &= ok
        if verbose:
            status = "PASS" if ok else "FAIL"
            print(f"{status}  {name:<{width}}  {detail}")
    if verbose:
        print("selftest:", "all passed" if ok_all else "FAILURES above")
    return ok_all
