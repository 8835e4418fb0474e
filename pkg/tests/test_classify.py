"""Block classification against independent replay oracles.

The library sweeps the event log once; the oracles in oracles.py rebuild
per-position (and per-site) time series and take literal minima, so a
classification bug in either direction shows up as a set mismatch.
"""

import numpy as np
import pytest

from rwdre.environment import ParticleField
from rwdre.model import ModelConfig
from rwdre.renorm.classify import (FieldEventLog, LogError, classify_blocks,
                                   record_field_log)
from rwdre.renorm.grid import BlockGrid
from rwdre.renorm.params import RenormParams

from oracles import (_WindowSeries, fine_grid_classify_bad,
                     oracle_classify_bad, oracle_classify_vacant)


def make_instance(c0, gamma0, r, mu, t, space_bound, box_radius, seed):
    params = RenormParams(c0=c0, gamma0=gamma0, r=r, mu=mu)
    config = ModelConfig.solomon(0.7, mu=mu)
    grid = BlockGrid(params, float(t), space_bound=space_bound)
    field = ParticleField(config, box_radius, seed)
    log = record_field_log(field, float(grid.n_layers * grid.delta))
    return log, grid


# (c0, gamma0, r, mu, t, space_bound, box_radius, seed); chosen so the
# labels come out mixed where the geometry allows it
INSTANCES = [
    (2, 0.1, 0, 0.5, 6, 4, 16, 101),
    (2, 0.1, 0, 2.0, 6, 4, 16, 7),
    (2, 0.3, 0, 5.0, 6, 4, 16, 7),
    (2, 0.3, 0, 8.0, 8, 6, 24, 13),
    (3, 0.1, 0, 1.0, 5, 5, 16, 9),
    (3, 0.2, 0, 4.0, 5, 5, 16, 15),
    (2, 0.1, 1, 2.0, 64, 64, 320, 11),
    (2, 0.1, 1, 8.0, 64, 64, 320, 31),
]


class TestOracleAgreement:

    @pytest.mark.parametrize("case", INSTANCES,
                             ids=lambda c: f"c0={c[0]},r={c[2]},mu={c[3]}")
    def test_labels_match_replay(self, case):
        log, grid = make_instance(*case)
        cls = classify_blocks(log, grid)
        lib_bad = {k for k, v in cls.bad.items() if v}
        lib_vac = {k for k, v in cls.vacant.items() if v}
        assert lib_bad == oracle_classify_bad(log, grid)
        assert lib_vac == oracle_classify_vacant(log, grid)

    @pytest.mark.parametrize("case", INSTANCES[1:3] + INSTANCES[4:5],
                             ids=lambda c: f"c0={c[0]},mu={c[3]}")
    def test_fine_grid_refinement_agrees(self, case):
        log, grid = make_instance(*case)
        cls = classify_blocks(log, grid)
        lib_bad = {k for k, v in cls.bad.items() if v}
        assert fine_grid_classify_bad(log, grid) == lib_bad

    def test_bad_array_matches_dict(self):
        log, grid = make_instance(*INSTANCES[2])
        cls = classify_blocks(log, grid)
        arr = cls.bad_array()
        lo, hi = grid.col_range
        for i in range(lo, hi + 1):
            for j in range(grid.n_layers):
                assert arr[i - lo, j] == cls.is_bad(i, j)


class TestDegenerateFields:

    def test_empty_field_is_all_bad_and_vacant(self):
        params = RenormParams(c0=2, gamma0=0.1, r=0, mu=1.0)
        grid = BlockGrid(params, 4.0, space_bound=3)
        lo = (grid.col_range[0] - 3) * grid.delta
        hi = (grid.col_range[1] + 4) * grid.delta
        log = FieldEventLog(
            t1=float(grid.n_layers * grid.delta), lo=lo, hi=hi,
            counts0=np.zeros(hi - lo, dtype=np.int64),
            start_pos=np.empty(0, dtype=np.int64),
            ev_t=np.empty(0), ev_pid=np.empty(0, dtype=np.int64),
            ev_src=np.empty(0, dtype=np.int64),
            ev_dst=np.empty(0, dtype=np.int64))
        cls = classify_blocks(log, grid)
        for (i, j) in grid.blocks():
            assert cls.is_bad(i, j)
            assert cls.is_vacant(i, j)

    def test_frozen_dense_log_is_all_good_and_occupied(self):
        # one particle per site, no moves: window sums are q everywhere,
        # clearly above gamma_r * mu * q for these parameters, and every
        # block site keeps its pedestal particle
        params = RenormParams(c0=2, gamma0=0.1, r=1, mu=2.0)
        grid = BlockGrid(params, 64.0, space_bound=64)
        lo = (grid.col_range[0] - 3) * grid.delta
        hi = (grid.col_range[1] + 4) * grid.delta
        assert params.u_threshold < params.q_len
        log = FieldEventLog(
            t1=64.0, lo=lo, hi=hi,
            counts0=np.ones(hi - lo, dtype=np.int64),
            start_pos=np.arange(lo, hi, dtype=np.int64),
            ev_t=np.empty(0), ev_pid=np.empty(0, dtype=np.int64),
            ev_src=np.empty(0, dtype=np.int64),
            ev_dst=np.empty(0, dtype=np.int64))
        cls = classify_blocks(log, grid)
        assert not cls.bad
        assert not cls.vacant


class TestWitnesses:

    @pytest.mark.parametrize("case", [INSTANCES[2], INSTANCES[7]],
                             ids=["r0", "r1"])
    def test_bad_witness_is_a_real_dip(self, case):
        log, grid = make_instance(*case)
        cls = classify_blocks(log, grid)
        q = grid.params.q_len
        thr = grid.params.u_threshold
        series = _WindowSeries(log, q)
        assert cls.bad
        for (i, j), (x, s) in cls.bad_witness.items():
            v_lo, v_hi = grid.vee(i)
            assert v_lo <= x <= v_hi - q
            _, _, t_lo, t_hi = grid.enlarged(i, j)
            assert t_lo <= s < t_hi
            assert series.value_at(x - log.lo, s) < thr

    def test_vacant_witness_has_no_tagged_particle(self):
        log, grid = make_instance(*INSTANCES[1])
        cls = classify_blocks(log, grid)
        assert cls.vacant
        delta = grid.delta
        ev_t = np.asarray(log.ev_t)
        ev_pid = np.asarray(log.ev_pid)
        ev_dst = np.asarray(log.ev_dst)

        def positions_at(t):
            pos = np.asarray(log.start_pos).copy()
            k = np.searchsorted(ev_t, t, side="right")
            if k:
                rev_p, rev_d = ev_pid[:k][::-1], ev_dst[:k][::-1]
                up, first = np.unique(rev_p, return_index=True)
                pos[up] = rev_d[first]
            return pos

        for (i, j), (x, s) in cls.vacant_witness.items():
            x_lo, x_hi, t_lo, t_hi = grid.block(i, j)
            assert x_lo <= x < x_hi
            assert t_lo <= s < t_hi
            v_lo, v_hi = grid.vee(i)
            ped = positions_at(max(0.0, (j - 1) * delta))
            tagged = (ped >= v_lo) & (ped < v_hi)
            at_s = positions_at(s)
            assert np.count_nonzero(tagged & (at_s == x)) == 0


class TestLogValidation:

    def test_short_log_raises_with_missing_span(self):
        params = RenormParams(c0=2, gamma0=0.1, r=1, mu=2.0)
        grid = BlockGrid(params, 64.0, space_bound=64)
        config = ModelConfig.solomon(0.7, mu=2.0)
        log = record_field_log(ParticleField(config, 320, 5), 48.0)
        with pytest.raises(LogError, match="missing"):
            classify_blocks(log, grid)

    def test_narrow_log_raises(self):
        params = RenormParams(c0=2, gamma0=0.1, r=1, mu=2.0)
        grid = BlockGrid(params, 64.0, space_bound=64)
        config = ModelConfig.solomon(0.7, mu=2.0)
        log = record_field_log(ParticleField(config, 256, 5), 64.0)
        with pytest.raises(LogError, match="grid needs"):
            classify_blocks(log, grid)

    def test_recording_requires_fresh_field(self):
        config = ModelConfig.solomon(0.7, mu=1.0)
        field = ParticleField(config, 32, 3)
        field.advance_to(1.0)
        with pytest.raises(ValueError, match="fresh"):
            record_field_log(field, 2.0)

    def test_log_sorts_events_on_build(self):
        log = FieldEventLog(
            t1=4.0, lo=0, hi=4,
            counts0=np.array([1, 1, 0, 0], dtype=np.int64),
            start_pos=np.array([0, 1], dtype=np.int64),
            ev_t=np.array([2.0, 1.0]),
            ev_pid=np.array([0, 1], dtype=np.int64),
            ev_src=np.array([0, 1], dtype=np.int64),
            ev_dst=np.array([1, 2], dtype=np.int64))
        assert np.array_equal(log.ev_t, [1.0, 2.0])
        assert np.array_equal(log.ev_pid, [1, 0])
        assert np.array_equal(log.ev_dst, [2, 1])


class TestDeterminismAndDump:

    def test_same_log_same_labels(self):
        log, grid = make_instance(*INSTANCES[3])
        a = classify_blocks(log, grid)
        b = classify_blocks(log, grid)
        assert a.bad == b.bad and a.vacant == b.vacant
        assert a.bad_witness == b.bad_witness
        assert a.vacant_witness == b.vacant_witness

    def test_same_seed_same_log(self):
        la, _ = make_instance(*INSTANCES[1])
        lb, _ = make_instance(*INSTANCES[1])
        assert np.array_equal(la.counts0, lb.counts0)
        assert np.array_equal(la.ev_t, lb.ev_t)
        assert np.array_equal(la.ev_pid, lb.ev_pid)

    def test_csv_shape_and_roundtrip(self, tmp_path):
        log, grid = make_instance(*INSTANCES[2])
        cls = classify_blocks(log, grid)
        text = cls.to_csv()
        lines = text.strip().split("\n")
        assert lines[0] == "r,i,j,label,occupied,witness_x,witness_t"
        n_blocks = (grid.col_range[1] - grid.col_range[0] + 1) * grid.n_layers
        assert len(lines) == 1 + n_blocks
        for row in lines[1:]:
            r, i, j, label, occ, wx, wt = row.split(",")
            assert int(r) == grid.params.r
            assert label in ("bad", "good") and occ in ("vacant", "occupied")
            assert (label == "bad") == cls.is_bad(int(i), int(j))
            assert (occ == "vacant") == cls.is_vacant(int(i), int(j))
            if label == "bad":
                assert wx != "" and wt != ""
        out = tmp_path / "labels.csv"
        cls.dump(out)
        assert out.read_text() == text
