"""Seeded two-color competing growth on the box: seed fields, coloring
dynamics and the coupling to the conversion process."""

import math

import numpy as np
import pytest

from convfpp import (
    ClockKind,
    ConfigurationError,
    ModelParams,
    RandomField,
    RedClockSource,
    SeedField,
    SeedSource,
    SspParams,
    SspVerdict,
    Topology,
    bernoulli_seeds,
    coupling_consistency,
    estimate_red_survival,
    label_type2_seeds,
    run_ssp,
    seed_density,
)
from convfpp.ssplab import spread_inequality_holds

from conftest import dijkstra_lattice


def lattice(lam=1.0, rho=0.0, d=2):
    return ModelParams(d=d, lam=lam, rho=rho, topology=Topology.LATTICE)


class TestParams:
    def test_kappa_must_exceed_one(self):
        with pytest.raises(ConfigurationError):
            SspParams(kappa=1.0, p=0.1)

    def test_bernoulli_needs_p(self):
        with pytest.raises(ConfigurationError):
            SspParams(kappa=2.0)

    def test_coupled_needs_rates(self):
        with pytest.raises(ConfigurationError):
            SspParams(kappa=2.0, seed_source=SeedSource.COUPLED, C=3.0)


class TestSeedFields:
    def test_bernoulli_density(self):
        field = RandomField(lattice(), 3, 0)
        sf = bernoulli_seeds(0.01, 150, field)
        n = sf.seeds.size
        se = math.sqrt(0.01 * 0.99 / n)
        assert abs(sf.density - 0.01) < 4 * se

    def test_bernoulli_is_deterministic_per_field(self):
        field = RandomField(lattice(), 3, 5)
        a = bernoulli_seeds(0.05, 40, field)
        b = bernoulli_seeds(0.05, 40, field)
        assert np.array_equal(a.seeds, b.seeds)

    def test_closed_form_density(self):
        # C=3, lam=rho=0: only the slow-t1 clause contributes
        expect = 1.0 - (1.0 - math.exp(-3.0)) ** 4
        assert seed_density(3.0, 0.0, 0.0, 2) == pytest.approx(expect)

    def test_coupled_seed_density_matches_closed_form(self):
        C, lam, rho, R = 2.0, 1e-3, 1e-3, 150
        field = RandomField(lattice(lam, rho), 29, 0)
        sf = label_type2_seeds(C, lam, rho, R, field)
        p = seed_density(C, lam, rho, 2)
        n = sf.seeds.size
        se = math.sqrt(p * (1 - p) / n)
        assert abs(sf.density - p) < 4 * se

    def test_coupled_seeds_scalar_crosscheck(self):
        C, lam, rho, R = 1.5, 0.05, 0.1, 8
        field = RandomField(lattice(lam, rho), 7, 0)
        sf = label_type2_seeds(C, lam, rho, R, field)
        mism = 0
        for x in range(-R, R + 1):
            for y in range(-R, R + 1):
                site = (x, y)
                nbrs = [(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)]
                slow1 = any(field.lattice_edge_clock(ClockKind.T1, site, nb) >= C
                            for nb in nbrs)
                fast2 = any(
                    field.lattice_edge_clock(k, site, nb) < C * C
                    for nb in nbrs for k in (ClockKind.T2, ClockKind.T3))
                conv = field.conv_clock(site) < C * C
                expect = slow1 or fast2 or conv
                mism += expect != bool(sf.seeds[x + R, y + R])
        assert mism == 0

    def test_seed_probability_bounds(self):
        with pytest.raises(ConfigurationError):
            bernoulli_seeds(1.0, 10, RandomField(lattice(), 0, 0))
        with pytest.raises(ConfigurationError):
            label_type2_seeds(0.0, 0.1, 0.1, 10, RandomField(lattice(0.1, 0.1), 0, 0))


class TestColoringDynamics:
    def test_no_seeds_red_reaches_boundary(self):
        params = SspParams(kappa=4.0, p=0.0, C=3.0)
        field = RandomField(lattice(), 5, 0)
        st = run_ssp(params, 8, field)
        assert st.verdict is SspVerdict.RED_REACHED_BOUNDARY
        assert st.red_survival
        assert not (st.color == 2).any()

    def test_no_seeds_times_match_capped_shortest_paths(self):
        params = SspParams(kappa=4.0, p=0.0, C=3.0)
        field = RandomField(lattice(), 5, 1)
        R = 8
        st = run_ssp(params, R, field)
        dist = dijkstra_lattice(field, R, rate_cap=3.0)
        stop = st.T[st.color == 1].max()
        side = 2 * R + 1
        for x in range(-R, R + 1):
            for y in range(-R, R + 1):
                if st.color[x + R, y + R] == 1:
                    assert st.T[x + R, y + R] == dist[(x, y)]
        for site, t in dist.items():
            if t < stop:
                assert st.color[site[0] + R, site[1] + R] == 1

    def test_unit_red_clocks_color_by_graph_distance(self):
        params = SspParams(kappa=4.0, p=0.0, C=3.0,
                           red_clock_source=RedClockSource.UNIT)
        field = RandomField(lattice(), 2, 0)
        R = 5
        st = run_ssp(params, R, field)
        for x in range(-R, R + 1):
            for y in range(-R, R + 1):
                if st.color[x + R, y + R] == 1:
                    assert st.T[x + R, y + R] == float(abs(x) + abs(y))

    def test_origin_seed_skips_dynamics(self):
        seeds = np.zeros((11, 11), dtype=bool)
        seeds[5, 5] = True
        sf = SeedField(R=5, d=2, seeds=seeds, p=0.5)
        params = SspParams(kappa=4.0, p=0.5, C=3.0)
        st = run_ssp(params, 5, RandomField(lattice(), 0, 0), seed_field=sf)
        assert st.origin_seed
        assert not st.red_survival

    def test_trapped_origin_turns_everything_blue(self):
        # a seed ring at radius 1 converts before red can cross it:
        # every red ring from the origin targets a seed
        seeds = np.zeros((13, 13), dtype=bool)
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            seeds[6 + dx, 6 + dy] = True
        sf = SeedField(R=6, d=2, seeds=seeds, p=0.5)
        params = SspParams(kappa=400.0, p=0.5, C=3.0)
        st = run_ssp(params, 6, RandomField(lattice(), 1, 0), seed_field=sf)
        assert st.verdict is SspVerdict.RED_DIED
        assert not st.red_survival

    def test_colors_are_exclusive_and_timed_once(self):
        params = SspParams(kappa=8.0, p=0.02, C=3.0)
        for trial in range(5):
            field = RandomField(lattice(), 11, trial)
            st = run_ssp(params, 12, field)
            colored = st.color > 0
            assert np.all(np.isfinite(st.T[colored]))
            assert np.all(np.isinf(st.T[~colored]))
            assert np.all(st.T[colored] >= 0.0)

    def test_seed_clusters_color_atomically(self):
        params = SspParams(kappa=8.0, p=0.05, C=3.0)
        from scipy import ndimage
        for trial in range(5):
            field = RandomField(lattice(), 19, trial)
            st = run_ssp(params, 12, field)
            seeds = st.seed_field.seeds
            labels, ncl = ndimage.label(seeds)
            for c in range(1, ncl + 1):
                mask = labels == c
                cols = np.unique(st.color[mask])
                assert cols.size == 1  # whole cluster shares one fate
                if cols[0] == 2:
                    assert np.unique(st.T[mask]).size == 1

    def test_blue_spreads_strictly_slower(self):
        # kappa far above every capped red clock: blue can never outrun
        # red into open territory, so red reaches the boundary unless
        # the origin is enclosed
        params = SspParams(kappa=500.0, p=0.003, C=3.0)
        reached = 0
        for trial in range(10):
            field = RandomField(lattice(), 23, trial)
            st = run_ssp(params, 10, field)
            if st.origin_seed:
                continue
            reached += st.verdict is SspVerdict.RED_REACHED_BOUNDARY
        assert reached >= 9


class TestRedSurvivalCurve:
    def test_survival_nonincreasing_in_density(self):
        curve = estimate_red_survival(50.0, 30, trials=40,
                                      p_grid=(1e-3, 3e-2), master_seed=2)
        fr = [pt.fraction for pt in curve.points]
        assert fr[0] >= fr[1]
        assert curve.points[0].p < curve.points[1].p

    def test_fit_is_positive_and_bracketed(self):
        curve = estimate_red_survival(50.0, 25, trials=60,
                                      p_grid=(5e-3, 2e-2), master_seed=4)
        lo, hi = curve.c_interval
        assert lo <= curve.c_hat <= hi
        assert curve.c_hat >= 0.0

    def test_trial_validation(self):
        with pytest.raises(ConfigurationError):
            estimate_red_survival(50.0, 10, trials=0)


class TestCoupling:
    def test_inequality_definitional_for_large_C(self):
        field = RandomField(lattice(1e-4, 1e-4), 3, 0)
        non_seed, holds = spread_inequality_holds(4.0, 1e-4, 1e-4, 10, field)
        assert non_seed.any()
        assert holds[non_seed].all()

    def test_report_counts(self):
        rep = coupling_consistency(6.0, 1e-5, 1e-5, 6, trials=6,
                                   master_seed=1, max_sites_per_trial=50)
        assert rep.trials == 6
        assert rep.sites_checked <= 6 * 50
        assert rep.sites_holding == rep.sites_checked
        assert rep.all_hold
        assert rep.zero_seed_survived == rep.zero_seed_trials
