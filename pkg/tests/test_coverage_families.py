"""Coverage detector, full-cover estimates, and separated families."""

import math

import numpy as np
import pytest

from rwdre.environment import ParticleField, TrackingError
from rwdre.model import ModelConfig
from rwdre.renorm.classify import record_field_log
from rwdre.renorm.coverage import (conditional_coverage, coverage_event,
                                   estimate_f_r, mu_one, pedestal_event)
from rwdre.renorm.families import (GENERAL, MODES, SAME_ROW,
                                   extract_separated, separated_family)
from rwdre.renorm.grid import BlockGrid
from rwdre.renorm.params import RenormParams, chernoff_bound

from oracles import coverage_gap_fine_grid, coverage_two_particles_exact, \
    max_separated_exact


class _StubHandle:
    """Minimal stand-in exposing hand-written occupancy intervals."""

    def __init__(self, t0, intervals):
        self.t0 = t0
        self._iv = intervals
        self.field = self

    def linear_index(self, x):
        return x

    def occupancy_intervals(self, x, t_lo, t_hi):
        return [(max(a, t_lo), min(b, t_hi))
                for (a, b) in sorted(self._iv.get(x, []))
                if b > t_lo and a < t_hi]


def _unit_grid():
    params = RenormParams(c0=2, gamma0=0.1, r=0, mu=1.0)
    return BlockGrid(params, 2.0, space_bound=2)


class TestCoverageEventLogic:
    # block (0, 1) of the unit grid is site 0 over [1, 2)

    def test_full_interval_is_covered(self):
        h = _StubHandle(0.0, {0: [(1.0, 2.0)]})
        gap, witness = coverage_event(h, _unit_grid(), 0, 1)
        assert not gap and witness is None

    def test_slack_interval_is_covered(self):
        h = _StubHandle(0.0, {0: [(0.5, 2.5)]})
        gap, _ = coverage_event(h, _unit_grid(), 0, 1)
        assert not gap

    def test_abutting_intervals_are_covered(self):
        h = _StubHandle(0.0, {0: [(1.0, 1.5), (1.5, 2.0)]})
        gap, _ = coverage_event(h, _unit_grid(), 0, 1)
        assert not gap

    def test_interior_hole_is_a_gap(self):
        h = _StubHandle(0.0, {0: [(1.0, 1.4), (1.6, 2.0)]})
        gap, witness = coverage_event(h, _unit_grid(), 0, 1)
        assert gap
        assert witness == (0, pytest.approx(1.4))

    def test_late_start_is_a_gap_at_layer_start(self):
        h = _StubHandle(0.0, {0: [(1.3, 2.0)]})
        gap, witness = coverage_event(h, _unit_grid(), 0, 1)
        assert gap and witness == (0, 1.0)

    def test_early_end_is_a_gap(self):
        h = _StubHandle(0.0, {0: [(1.0, 1.8)]})
        gap, witness = coverage_event(h, _unit_grid(), 0, 1)
        assert gap and witness == (0, pytest.approx(1.8))

    def test_empty_site_is_a_gap(self):
        h = _StubHandle(0.0, {})
        gap, witness = coverage_event(h, _unit_grid(), 0, 1)
        assert gap and witness == (0, 1.0)

    def test_wrong_tag_time_raises(self):
        h = _StubHandle(0.5, {0: [(1.0, 2.0)]})
        with pytest.raises(TrackingError, match="pedestal"):
            coverage_event(h, _unit_grid(), 0, 1)


class TestCoverageAgainstReplay:

    @pytest.mark.parametrize("mu,seed", [(1.0, 3), (2.0, 3), (2.0, 17),
                                         (3.0, 5), (0.5, 29)])
    def test_live_field_matches_fine_grid(self, mu, seed):
        params = RenormParams(c0=2, gamma0=0.1, r=0, mu=mu)
        config = ModelConfig.solomon(0.7, mu=mu)
        grid = BlockGrid(params, 2.0, space_bound=4)
        log = record_field_log(ParticleField(config, 16, seed), 2.0)
        for i in range(-2, 3):
            fld = ParticleField(config, 16, seed)
            handle = fld.tag_and_track(grid.vee(i))
            fld.advance_to(2.0)
            gap, witness = coverage_event(handle, grid, i, 1)
            handle.release()
            assert gap == coverage_gap_fine_grid(log, grid, i, 1)
            if gap:
                x, s = witness
                x_lo, x_hi, t_lo, t_hi = grid.block(i, 1)
                assert x_lo <= x < x_hi and t_lo <= s < t_hi


class TestFullCoverEstimate:

    def test_two_particle_exact_cross_check(self):
        params = RenormParams(c0=2, gamma0=0.1, r=0, mu=1.0)
        exact_uniform = coverage_two_particles_exact(1.0, list(range(-3, 4)))
        exact_corner = coverage_two_particles_exact(1.0, [-3])
        out = estimate_f_r(params, replicas=1500, seed=99, n_particles=2)
        lo, hi = out["uniform"].ci95
        assert lo - 0.01 <= exact_uniform <= hi + 0.01
        lo, hi = out["corner"].ci95
        assert lo - 0.01 <= exact_corner <= hi + 0.01

    def test_estimates_land_strictly_inside_unit_interval(self):
        params = RenormParams(c0=2, gamma0=0.1, r=0, mu=1.0)
        out = estimate_f_r(params, replicas=300, seed=11)
        for est in out.values():
            assert est.n_particles == 8
            assert 0.0 < est.f_hat < 1.0
            assert est.ci95[0] <= est.f_hat <= est.ci95[1]

    def test_corner_start_covers_less_than_uniform(self):
        params = RenormParams(c0=2, gamma0=0.1, r=0, mu=1.0)
        out = estimate_f_r(params, replicas=300, seed=11)
        assert out["corner"].f_hat < out["uniform"].f_hat

    def test_deterministic_in_seed(self):
        params = RenormParams(c0=2, gamma0=0.1, r=0, mu=1.0)
        a = estimate_f_r(params, replicas=60, seed=5)
        b = estimate_f_r(params, replicas=60, seed=5)
        assert a == b


class TestPedestal:

    def test_empty_field_pedestal_fails(self):
        params = RenormParams(c0=2, gamma0=0.1, r=1, mu=1.0)
        grid = BlockGrid(params, 2.0 * params.delta)
        config = ModelConfig.solomon(0.7, 0.0)
        fld = ParticleField(config, 300, 3)
        snap = fld.snapshot_window(grid.vee(0))
        assert not pedestal_event(snap, grid, 0, 1)

    def test_equilibrium_pedestal_holds_at_chernoff_rate(self):
        # P(fail) <= chernoff_bound(7 * delta * mu) since the threshold
        # gamma0 * mu * delta sits far below half the pedestal mean
        params = RenormParams(c0=2, gamma0=0.1, r=1, mu=4.0)
        delta = params.delta
        assert params.pedestal_threshold <= 7 * delta * params.mu / 2
        bound = chernoff_bound(7 * delta * params.mu)
        assert bound < 1e-6
        grid = BlockGrid(params, 2.0 * delta)
        config = ModelConfig.solomon(0.7, params.mu)
        for k in range(400):
            fld = ParticleField(config, 300, 1000 + k)
            snap = fld.snapshot_window(grid.vee(0))
            assert pedestal_event(snap, grid, 0, 1)

    def test_wrong_snapshot_time_raises(self):
        params = RenormParams(c0=2, gamma0=0.1, r=0, mu=1.0)
        grid = BlockGrid(params, 2.0)
        config = ModelConfig.solomon(0.7, params.mu)
        fld = ParticleField(config, 16, 3)
        fld.advance_to(0.5)
        snap = fld.snapshot_window(grid.vee(0))
        with pytest.raises(ValueError, match="pedestal"):
            pedestal_event(snap, grid, 0, 1)


class TestMuOne:

    def test_matches_direct_formula(self):
        f, g0, e1 = 0.5, 0.1, 0.1
        expect = (8.0 / g0) * (1.0 + math.log(e1) / math.log(1.0 - f))
        assert mu_one(f, g0, e1) == pytest.approx(expect)

    def test_decreasing_in_cover_probability(self):
        vals = [mu_one(f, 0.1, 0.1) for f in (0.05, 0.2, 0.5, 0.9)]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    @pytest.mark.parametrize("f", [0.0, 1.0, -0.1, 1.5])
    def test_rejects_degenerate_cover(self, f):
        with pytest.raises(ValueError):
            mu_one(f, 0.1, 0.1)

    @pytest.mark.parametrize("e1", [0.0, 1.0, 2.0])
    def test_rejects_degenerate_target(self, e1):
        with pytest.raises(ValueError):
            mu_one(0.5, 0.1, e1)


class TestConditionalCoverage:

    def test_smoke_and_determinism(self):
        params = RenormParams(c0=2, gamma0=0.1, r=0, mu=2.0)
        a = conditional_coverage(params, replicas=300, seed=21)
        b = conditional_coverage(params, replicas=300, seed=21)
        assert a == b
        assert 0 < a.pedestal_count <= 300
        assert 0 <= a.joint_count <= a.pedestal_count
        assert 0.0 <= a.p_gap_given_pedestal <= 1.0
        assert a.ci95[0] <= a.p_gap_given_pedestal <= a.ci95[1]


class TestSeparatedFamilies:

    def test_same_row_examples(self):
        assert separated_family([(0, 2), (8, 2)], SAME_ROW)
        assert separated_family([(0, 2), (9, 2), (20, 2)], SAME_ROW)
        assert not separated_family([(0, 2), (7, 2)], SAME_ROW)
        assert not separated_family([(0, 2), (8, 3)], SAME_ROW)
        assert separated_family([], SAME_ROW)
        assert separated_family([(5, 1)], SAME_ROW)

    def test_general_examples(self):
        assert separated_family([(0, 0), (10, 0)], GENERAL)
        assert separated_family([(0, 0), (6, 4)], GENERAL)
        assert not separated_family([(0, 0), (4, 4)], GENERAL)
        assert not separated_family([(0, 0), (9, 1)], GENERAL)
        assert separated_family([(3, 3)], GENERAL)

    def test_unknown_mode_raises(self):
        with pytest.raises(ValueError, match="mode"):
            separated_family([(0, 0)], "diagonal")
        with pytest.raises(ValueError, match="mode"):
            extract_separated([(0, 0)], "diagonal")

    @pytest.mark.parametrize("mode", MODES)
    def test_extraction_is_valid_and_deterministic(self, mode):
        rng = np.random.default_rng(31)
        for _ in range(40):
            n = int(rng.integers(0, 41))
            pts = [(int(rng.integers(-30, 30)), int(rng.integers(0, 8)))
                   for _ in range(n)]
            fam = extract_separated(pts, mode)
            assert separated_family(fam, mode)
            assert set(fam) <= set(pts)
            assert fam == extract_separated(list(reversed(pts)), mode)

    @pytest.mark.parametrize("mode", MODES)
    def test_extraction_meets_density_bound(self, mode):
        rng = np.random.default_rng(77)
        for _ in range(40):
            n = int(rng.integers(1, 41))
            pts = {(int(rng.integers(-30, 30)), int(rng.integers(0, 8)))
                   for _ in range(n)}
            fam = extract_separated(list(pts), mode)
            assert len(fam) >= max(1, len(pts) // 121)

    @pytest.mark.parametrize("mode", MODES)
    def test_extraction_bounded_by_exact_maximum(self, mode):
        rng = np.random.default_rng(13)
        for _ in range(25):
            n = int(rng.integers(0, 30))
            pts = {(int(rng.integers(-25, 25)), int(rng.integers(0, 6)))
                   for _ in range(n)}
            fam = extract_separated(list(pts), mode)
            assert len(fam) <= max_separated_exact(pts, mode)
