import numpy as np
import pytest

from carpet_energy import carpet
from carpet_energy.graph import graph_ball, p_energy
from carpet_energy.regularity import (
    cutoff_profile,
    harnack_report,
    log_caccioppoli_check,
)
from carpet_energy.solve import capacity


def constant_sampler(value):
    def sampler(boundary, trials, seed):
        yield "const", {int(b): value for b in boundary}

    return sampler


def scaled_sampler(scale, seed0):
    def sampler(boundary, trials, seed):
        rng = np.random.default_rng(seed0)
        vals = rng.uniform(1e-3, 1.0, size=len(boundary)) * scale
        yield "scaled", dict(zip(map(int, boundary), map(float, vals)))

    return sampler


class TestHarnack:
    def test_constant_boundary_ratio_one(self, graphs):
        reports = harnack_report(
            2, 2.0, 9, 3.0, trials=1, graph=graphs(2), sampler=constant_sampler(0.7)
        )
        assert len(reports) == 1
        assert reports[0].ratio == pytest.approx(1.0)
        assert reports[0].h_min == pytest.approx(0.7)

    def test_spike_gives_finite_ratio(self, graphs):
        reports = harnack_report(3, 2.0, 0, 9.0, trials=3, graph=graphs(3))
        assert {r.label for r in reports} == {"spike", "ramp", "uniform_0"}
        for r in reports:
            assert np.isfinite(r.ratio)
            assert r.ratio >= 1.0
            assert r.h_min > 0

    def test_scale_invariance_of_ratio(self, graphs):
        base = harnack_report(
            2, 2.5, 9, 3.0, trials=1, graph=graphs(2), sampler=scaled_sampler(1.0, 42)
        )[0]
        scaled = harnack_report(
            2, 2.5, 9, 3.0, trials=1, graph=graphs(2), sampler=scaled_sampler(5.0, 42)
        )[0]
        assert scaled.ratio == pytest.approx(base.ratio, rel=1e-6)

    def test_ball_covering_graph_rejected(self, graphs):
        with pytest.raises(ValueError):
            harnack_report(1, 2.0, 0, 100.0, graph=graphs(1))

    def test_bad_delta_rejected(self, graphs):
        with pytest.raises(ValueError):
            harnack_report(2, 2.0, 9, 3.0, delta_h=1.5, graph=graphs(2))


class TestLogCaccioppoli:
    def test_constant_h_slack_is_rhs(self, graphs):
        G = graphs(2)
        phi = np.zeros(64)
        ball = graph_ball(G, 9, 2)
        phi[ball] = 1.0
        h = np.full(64, 2.0)
        p = 2.0
        slack = log_caccioppoli_check(G, p, h, phi)
        c_p = 2 ** (p - 1) / (p * (p - 1))
        assert slack == pytest.approx(c_p * p_energy(G, phi, p), rel=1e-12)

    def test_zero_cutoff_zero_slack(self, graphs):
        G = graphs(2)
        slack = log_caccioppoli_check(G, 2.0, np.full(64, 1.0), np.zeros(64))
        assert slack == 0.0

    def test_equilibrium_pair_nonnegative_slack(self, graphs):
        # h: equilibrium potential of an annulus, positive and superharmonic
        # inside the outer ball; phi: a smaller annulus cutoff inside it
        G = graphs(3)
        z = carpet.Word.from_string("222").code
        inner = graph_ball(G, z, 3)
        outer = graph_ball(G, z, 9)
        keep = np.ones(512, dtype=bool)
        keep[outer] = False
        _, sol_h = capacity(G, np.nonzero(keep)[0], inner, None, 2.0)
        h = sol_h.values.values + 1e-3  # strictly positive, same Laplacian
        inner2 = graph_ball(G, z, 2)
        mid = graph_ball(G, z, 5)
        keep2 = np.ones(512, dtype=bool)
        keep2[mid] = False
        _, sol_phi = capacity(G, np.nonzero(keep2)[0], inner2, None, 2.0)
        slack = log_caccioppoli_check(G, 2.0, h, sol_phi.values.values)
        assert slack >= -1e-8

    def test_nonpositive_h_rejected(self, graphs):
        G = graphs(2)
        phi = np.zeros(64)
        phi[9] = 1.0
        h = np.ones(64)
        h[9] = 0.0
        with pytest.raises(ValueError):
            log_caccioppoli_check(G, 2.0, h, phi)


class TestCutoff:
    def test_small_radius_indicator(self, graphs):
        # R = 0.5: both balls reduce to the center, the potential is its
        # indicator and the energy counts the boundary edges
        G = graphs(2)
        prof = cutoff_profile(2, 2.0, 9, 0.5, graph=graphs(2))
        deg = len(G.neighbors(9))
        assert prof.energy == pytest.approx(deg, rel=1e-10)
        values = prof.values
        assert values[9] == pytest.approx(1.0)
        assert np.allclose(np.delete(values, 9), 0.0, atol=1e-12)

    def test_profile_bounds_and_plates(self, graphs):
        G = graphs(3)
        z = carpet.Word.from_string("222").code
        prof = cutoff_profile(3, 2.0, z, 3.0, graph=G)
        v = prof.values
        assert v.min() >= 0.0 and v.max() <= 1.0
        assert np.allclose(v[graph_ball(G, z, 3.0)], 1.0)
        outside = np.ones(512, dtype=bool)
        outside[graph_ball(G, z, 6.0)] = False
        assert np.allclose(v[outside], 0.0)

    def test_fitted_exponent_positive(self, graphs):
        # the fit window (distance <= R/2) needs R >= 4 to span >1 distance
        z = carpet.Word.from_string("222").code
        prof = cutoff_profile(3, 2.0, z, 9.0, d_w=2.09, graph=graphs(3))
        assert prof.theta > 0
        assert prof.energy_bound_ratio > 0

    def test_energy_bound_ratio_stable_across_levels(self, graphs):
        ratios = []
        for n in (3, 4, 5):
            z = carpet.Word.from_string("2" * n).code
            prof = cutoff_profile(
                n, 2.0, z, 3.0 ** (n - 2), d_w=2.09, graph=graphs(n)
            )
            ratios.append(prof.energy_bound_ratio)
        assert max(ratios) / min(ratios) < 3.0

    def test_degenerate_fit_window_reports_nan(self, graphs):
        z = carpet.Word.from_string("222").code
        prof = cutoff_profile(3, 2.0, z, 3.0, d_w=2.09, graph=graphs(3))
        assert np.isnan(prof.theta)
        assert prof.to_dict()["theta"] is None

    def test_degenerate_annulus_rejected(self, graphs):
        with pytest.raises(ValueError):
            cutoff_profile(1, 2.0, 0, 50.0, graph=graphs(1))

    def test_json_fields(self, graphs):
        z = carpet.Word.from_string("22").code
        prof = cutoff_profile(2, 2.0, z, 2.0, graph=graphs(2))
        text = prof.to_json()
        assert '"energy"' in text and '"theta"' in text
