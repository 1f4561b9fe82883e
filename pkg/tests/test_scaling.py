import math

import numpy as np
import pytest

from carpet_energy import carpet
from carpet_energy.graph import graph_ball
from carpet_energy.scaling import (
    FRACTAL_DIMENSION,
    annulus_capacity,
    ball_loewner_probe,
    estimate_rho,
    face_capacity,
    walk_dimension,
    walk_dimension_grid,
)
from carpet_energy.solve import capacity, vertex_modulus


class TestFaceCapacity:
    @pytest.mark.parametrize("p", [1.5, 2.0, 2.5, 3.0])
    def test_level1_closed_form(self, p, graphs):
        value = face_capacity(p, 1, graph=graphs(1))
        assert value == pytest.approx(2.0 ** (3 - p), rel=1e-8)

    def test_left_right_equals_top_bottom(self, graphs):
        G = graphs(2)
        lr, _ = capacity(G, carpet.face_codes(2, "L"), carpet.face_codes(2, "R"), None, 2.5)
        tb, _ = capacity(G, carpet.face_codes(2, "T"), carpet.face_codes(2, "B"), None, 2.5)
        assert lr == pytest.approx(tb, rel=1e-10)

    def test_decreasing_at_p2(self, face_cap):
        caps = [face_cap(2.0, n)[0] for n in (1, 2, 3, 4)]
        assert all(b < a for a, b in zip(caps, caps[1:]))
        ratios = [a / b for a, b in zip(caps, caps[1:])]
        assert all(r > 1 for r in ratios)


class TestAnnulus:
    def test_positive_and_below_cut_bound(self, graphs):
        w = carpet.Word.from_string("1")
        value = annulus_capacity(2.0, w, 1, graph=graphs(2))
        # indicator of the descendants of w is admissible, so the capacity
        # is at most the number of edges leaving that block
        G = graphs(2)
        block = G.edges_u // 8 != G.edges_v // 8
        inner = (G.edges_u // 8 == w.code) | (G.edges_v // 8 == w.code)
        bound = int(np.sum(block & inner))
        assert 0 < value <= bound + 1e-12

    def test_side_cell_annulus_positive(self, graphs):
        # the radius-2 ball around a side cell misses the opposite side, so
        # the annulus is never degenerate at level 1
        w = carpet.Word.from_string("2")
        value = annulus_capacity(2.0, w, 1, graph=graphs(2))
        assert value > 0

    def test_comparable_with_face_capacity(self, graphs, face_cap):
        p = 2.0
        face2 = face_cap(p, 2)[0]
        G2 = graphs(2)
        ratios = []
        for code in range(8):
            w = carpet.Word(1, code)
            ball = graph_ball(graphs(1), w.code, 2)
            if len(ball) == 8:
                continue
            ratios.append(annulus_capacity(p, w, 1, graph=G2) / face2)
        assert ratios
        assert all(1e-2 <= r <= 1e2 for r in ratios)

    def test_monotone_in_outer_set(self, graphs):
        # enlarging the zero plate can only increase the capacity
        G = graphs(2)
        w = carpet.Word.from_string("1")
        inner = np.arange(8)
        ball = graph_ball(graphs(1), 0, 2)
        far = np.setdiff1d(np.arange(64), (ball[:, None] * 8 + np.arange(8)).ravel())
        smaller_plate = far[: len(far) // 2]
        big, _ = capacity(G, far, inner, None, 2.0)
        small, _ = capacity(G, smaller_plate, inner, None, 2.0)
        assert small <= big + 1e-12


class TestRho:
    def test_report_invariants(self, face_cap):
        report = estimate_rho(2.0, 3)
        assert all(c > 0 for c in report.face_caps)
        assert len(report.rho_estimates) == 2
        assert report.rho == report.rho_estimates[-1]
        assert report.d_w == pytest.approx(math.log(8 * report.rho) / math.log(3))
        assert report.d_f == pytest.approx(FRACTAL_DIMENSION)

    def test_rho2_sanity(self):
        report = estimate_rho(2.0, 3)
        # d_w(2) >= 2 means rho(2) >= 9/8
        assert report.rho >= 9 / 8 - 0.01
        assert report.d_w >= 2 - 0.05
        assert FRACTAL_DIMENSION - report.d_w < 1

    def test_needs_two_levels(self):
        with pytest.raises(ValueError):
            estimate_rho(2.0, 1)

    def test_annulus_spot_checks_included(self):
        words = (carpet.Word.from_string("1"),)
        report = estimate_rho(2.0, 2, annulus_words=words)
        assert "1" in report.annulus_caps
        assert report.annulus_caps["1"] > 0

    def test_json_and_csv(self):
        report = estimate_rho(2.0, 2)
        text = report.to_json()
        assert '"rho"' in text
        rows = report.csv_rows()
        assert rows[0][0] == 1
        assert rows[0][1] == pytest.approx(2.0, rel=1e-8)

    def test_walk_dimension_grid_flags(self):
        out = walk_dimension_grid([1.5, 2.0, 3.0], n_max=2)
        assert len(out["d_w"]) == 3
        assert all(np.isfinite(v) for v in out["d_w"])
        assert isinstance(out["monotone"], bool)

    def test_walk_dimension_sampled_grid(self):
        # increasing in p on the sampled grid (reported, flagged if ever
        # violated) and never below p itself, up to estimator slack
        out = walk_dimension_grid([1.2, 1.5, 2.0, 3.0, 4.0], n_max=3)
        assert out["monotone"] is True
        assert all(dw >= p - 0.05 for p, dw in zip(out["p"], out["d_w"]))


class TestLoewnerProbe:
    def test_adjacent_singletons_lower_bound(self, graphs):
        # the family of paths joining two adjacent singleton balls contains
        # the two-vertex path, so its modulus is at least 2^(1-p)
        G = graphs(2)
        for p in (1.5, 2.0, 3.0):
            res = vertex_modulus(G, [0], [1], None, p)
            assert res.value >= 2.0 ** (1 - p) * (1 - 1e-9)

    def test_probe_positive_and_deterministic(self, graphs):
        out1 = ball_loewner_probe(2.0, 3, 3.0, 1.0, trials=2, seed=7, graph=graphs(3), d_w=2.09)
        out2 = ball_loewner_probe(2.0, 3, 3.0, 1.0, trials=2, seed=7, graph=graphs(3), d_w=2.09)
        assert out1["min_normalized"] > 0
        assert out1["samples"] == out2["samples"]

    def test_normalization_exponent(self, graphs):
        d_w = 2.09
        out = ball_loewner_probe(2.0, 3, 3.0, 1.0, trials=1, seed=3, graph=graphs(3), d_w=d_w)
        assert out["d_w"] == d_w

    def test_radius_below_one_rejected(self, graphs):
        with pytest.raises(ValueError):
            ball_loewner_probe(2.0, 3, 0.5, 1.0, trials=1, graph=graphs(3), d_w=2.09)


def test_walk_dimension_formula():
    assert walk_dimension(9 / 8) == pytest.approx(2.0)
    assert walk_dimension(1 / 8) == pytest.approx(0.0)
