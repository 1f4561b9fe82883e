import numpy as np
import pytest

from carpet_energy import carpet
from carpet_energy.emeasure import (
    affine_chain_rule_check,
    consistency_check,
    energy_measure_table,
    smooth_chain_rule_probe,
    symmetry_pushforward_check,
    triangle_inequality_check,
)
from carpet_energy.graph import p_energy
from carpet_energy.sobolev import normalized_energy, restrict_to_cell

P, RHO = 2.0, 1.244


def brute_force_table(G, f, p, rho, n):
    """Independent recomputation: classify every edge by its level-n
    ancestor pair with plain Python dicts."""
    m = G.level
    block = 8 ** (m - n)
    masses = {}
    defect = 0.0
    for u, v in zip(G.edges_u.tolist(), G.edges_v.tolist()):
        term = abs(f[u] - f[v]) ** p
        if u // block == v // block:
            masses[u // block] = masses.get(u // block, 0.0) + term
        else:
            defect += term
    scale = rho**m
    out = np.zeros(8**n)
    for k, val in masses.items():
        out[k] = scale * val
    return out, scale * defect


class TestTable:
    def test_constant_all_zero(self, graphs):
        t = energy_measure_table(np.ones(512), P, RHO, 1, graph=graphs(3))
        assert np.all(t.masses == 0)
        assert t.crossing_defect == 0.0

    def test_level_zero_single_mass(self, graphs):
        rng = np.random.default_rng(0)
        f = rng.normal(size=512)
        t = energy_measure_table(f, P, RHO, 0, graph=graphs(3))
        assert len(t.masses) == 1
        assert t.crossing_defect == 0.0
        expect = normalized_energy(f, 3, P, RHO, graph=graphs(3))
        assert t.masses[0] == pytest.approx(expect, rel=1e-12)

    def test_total_identity(self, graphs):
        rng = np.random.default_rng(1)
        f = rng.normal(size=512)
        for n in (0, 1, 2, 3):
            t = energy_measure_table(f, P, RHO, n, graph=graphs(3))
            expect = RHO**3 * p_energy(graphs(3), f, P)
            assert t.total == pytest.approx(expect, rel=1e-12)
            assert np.all(t.masses >= 0)

    def test_against_brute_force(self, graphs):
        rng = np.random.default_rng(2)
        f = rng.normal(size=512)
        for n in (1, 2):
            t = energy_measure_table(f, P, RHO, n, graph=graphs(3))
            masses, defect = brute_force_table(graphs(3), f, P, RHO, n)
            assert np.allclose(t.masses, masses, rtol=1e-12, atol=1e-15)
            assert t.crossing_defect == pytest.approx(defect, rel=1e-12)

    def test_x_coordinate_symmetries(self, graphs):
        # reflection across the x-axis fixes f = x, so masses are invariant;
        # reflection across the y-axis sends f to -f + const, same masses
        x, _ = carpet.cell_centers(4)
        t = energy_measure_table(x, P, RHO, 1, graph=graphs(4))
        for k in (0, 2):  # S_0: x-axis mirror, S_2: y-axis mirror
            perm = carpet.symmetry_codes(carpet.SymmetryElement("reflection", k), 1)
            assert np.allclose(t.masses, t.masses[perm], rtol=1e-12)

    def test_csv_rows_words(self, graphs):
        t = energy_measure_table(np.arange(64.0), P, RHO, 1, graph=graphs(2))
        rows = list(t.csv_rows())
        assert rows[0][0] == "1"
        assert rows[-1][0] == "8"
        assert len(rows) == 8


class TestConsistency:
    def test_constant_zero_defects(self, graphs):
        f = np.full(512, 3.0)
        t1 = energy_measure_table(f, P, RHO, 1, graph=graphs(3))
        t2 = energy_measure_table(f, P, RHO, 2, graph=graphs(3))
        out = consistency_check(t1, t2)
        assert np.all(out["per_cell"] == 0)

    def test_exact_identity_random(self, graphs):
        rng = np.random.default_rng(3)
        f = rng.normal(size=512)
        G = graphs(3)
        t1 = energy_measure_table(f, P, RHO, 1, graph=G)
        t2 = energy_measure_table(f, P, RHO, 2, graph=G)
        out = consistency_check(t1, t2)
        assert np.all(out["per_cell"] >= -1e-15)
        # the per-cell defect is the level-2 crossing energy internal to w
        au1 = G.edges_u // 64
        av1 = G.edges_v // 64
        au2 = G.edges_u // 8
        av2 = G.edges_v // 8
        diffs = np.abs(f[G.edges_u] - f[G.edges_v]) ** P
        inside_parent = au1 == av1
        crosses_child = au2 != av2
        expect = RHO**3 * np.bincount(
            au1[inside_parent & crosses_child],
            weights=diffs[inside_parent & crosses_child],
            minlength=8,
        )
        assert np.allclose(out["per_cell"], expect, rtol=1e-12, atol=1e-15)

    def test_mismatched_tables_rejected(self, graphs):
        f = np.zeros(512)
        t1 = energy_measure_table(f, P, RHO, 1, graph=graphs(3))
        t3 = energy_measure_table(f, P, RHO, 3, graph=graphs(3))
        with pytest.raises(ValueError):
            consistency_check(t1, t3)


class TestChainRules:
    def test_affine_identity_cases(self, graphs):
        rng = np.random.default_rng(4)
        f = rng.normal(size=512)
        G = graphs(3)
        assert affine_chain_rule_check(f, 1.0, 4.2, P, RHO, 1, graph=G) <= 1e-12
        assert affine_chain_rule_check(f, -1.0, 0.0, P, RHO, 1, graph=G) <= 1e-12
        assert affine_chain_rule_check(f, 2.0, -1.0, P, RHO, 2, graph=G) <= 1e-12

    def test_smooth_probe_affine_machine_precision(self):
        def sampler(m):
            return carpet.cell_centers(m)[0]

        errors = smooth_chain_rule_probe(
            sampler, lambda t: 3 * t + 1, lambda t: np.full_like(t, 3.0),
            P, RHO, 1, resolutions=(3,)
        )
        assert errors[0] <= 1e-12

    def test_smooth_probe_square_decreasing(self):
        def sampler(m):
            return carpet.cell_centers(m)[0]

        errors = smooth_chain_rule_probe(
            sampler, lambda t: t**2, lambda t: 2 * t, P, RHO, 1,
            resolutions=(3, 4, 5),
        )
        assert errors[0] > errors[1] > errors[2]

    def test_smooth_probe_constant_zero_table(self, graphs):
        def sampler(m):
            return carpet.cell_centers(m)[0]

        t = energy_measure_table(
            np.full(512, 5.0), P, RHO, 1, graph=graphs(3)
        )
        assert np.all(t.masses == 0)


class TestSymmetryPushforward:
    def test_identity_exact(self, graphs):
        rng = np.random.default_rng(5)
        f = rng.normal(size=512)
        err = symmetry_pushforward_check(f, carpet.IDENTITY, P, RHO, 1, graph=graphs(3))
        assert err == 0.0

    def test_all_elements(self, graphs):
        rng = np.random.default_rng(6)
        f = rng.normal(size=512)
        for phi in carpet.D4:
            err = symmetry_pushforward_check(f, phi, P, RHO, 1, graph=graphs(3))
            assert err <= 1e-12

    def test_composition_matches_sequential(self, graphs):
        rng = np.random.default_rng(7)
        f = rng.normal(size=512)
        a = carpet.SymmetryElement("rotation", 1)
        b = carpet.SymmetryElement("reflection", 3)
        ab = carpet.compose(a, b)  # apply b first: tau_ab = tau_a o tau_b
        step = f[carpet.symmetry_codes(a, 3)][carpet.symmetry_codes(b, 3)]
        direct = f[carpet.symmetry_codes(ab, 3)]
        assert np.array_equal(step, direct)


class TestTriangleInequality:
    def test_zero_second_function_equality(self, graphs):
        rng = np.random.default_rng(8)
        f = rng.normal(size=512)
        g = rng.uniform(size=8)
        slack = triangle_inequality_check(f, np.zeros(512), g, P, RHO, 1, graph=graphs(3))
        assert slack == pytest.approx(0.0, abs=1e-12)

    def test_equal_functions_equality(self, graphs):
        rng = np.random.default_rng(9)
        f = rng.normal(size=512)
        g = rng.uniform(size=8)
        slack = triangle_inequality_check(f, f, g, P, RHO, 1, graph=graphs(3))
        assert abs(slack) <= 1e-10

    def test_hundred_seeded_trials(self, graphs):
        G = graphs(3)
        for trial in range(100):
            rng = np.random.default_rng(1000 + trial)
            f1 = rng.normal(size=512)
            f2 = rng.normal(size=512)
            g = rng.uniform(size=8)
            p = rng.choice([1.5, 2.0, 3.0])
            slack = triangle_inequality_check(f1, f2, g, p, RHO, 1, graph=G)
            assert slack >= -1e-10

    def test_negative_weights_rejected(self, graphs):
        with pytest.raises(ValueError):
            triangle_inequality_check(
                np.zeros(512), np.zeros(512), -np.ones(8), P, RHO, 1, graph=graphs(3)
            )


class TestSelfSimilarity:
    def test_cell_mass_equals_scaled_restriction(self, graphs):
        rng = np.random.default_rng(10)
        f = rng.normal(size=512)
        t = energy_measure_table(f, P, RHO, 1, graph=graphs(3))
        for code in range(8):
            sub = restrict_to_cell(f, carpet.Word(1, code))
            t_sub = energy_measure_table(sub.values, P, RHO, 0, graph=graphs(2))
            assert t.masses[code] == pytest.approx(RHO * t_sub.masses[0], rel=1e-12)

    def test_clamp_contracts_total(self, graphs):
        rng = np.random.default_rng(11)
        f = rng.normal(size=512)
        t = energy_measure_table(f, P, RHO, 1, graph=graphs(3))
        tc = energy_measure_table(np.clip(f, 0, 1), P, RHO, 1, graph=graphs(3))
        assert tc.total <= t.total + 1e-12

    def test_defect_share_not_growing(self, graphs):
        # crossing defect share at report level 1 for the coordinate function
        shares = []
        for m in (3, 4):
            x, _ = carpet.cell_centers(m)
            t = energy_measure_table(x, P, RHO, 1, graph=graphs(m))
            shares.append(t.crossing_defect / t.total)
        assert shares[1] <= shares[0] * 1.1
