"""Acceptance gate: ten end-to-end checks, one test per criterion.

Each test prints a single PASS/FAIL line (visible with -s; `pytest -v`
shows the same verdict through the test name).  Tolerances are fixed
here, not computed from the data under test; the speed tolerance of
criterion 2 was frozen from a pilot run at one tenth the replica count.
Criteria 2 and 3 share one 200-replica speed curve; criterion 10 is the
long pole (roughly an hour and a half on one core).
"""

import dataclasses
import math

import numpy as np
import pytest

from rwdre._rng import derive_seed
from rwdre.environment import ParticleField, default_box_radius
from rwdre.harness import ExperimentSpec, run_experiment
from rwdre.harness.stats import poisson_cdf_exact, poisson_gof
from rwdre.model import FROZEN, ModelConfig
from rwdre.renorm.animal import lattice_animal
from rwdre.renorm.classify import classify_blocks, record_field_log
from rwdre.renorm.coverage import (conditional_coverage, coverage_event,
                                   estimate_f_r, mu_one)
from rwdre.renorm.dp import phi_sup_array
from rwdre.renorm.grid import BlockGrid
from rwdre.renorm.params import RenormParams, chernoff_bound
from rwdre.renorm.tails import TailSpec, measure_block_tails
from rwdre.walker import simulate_green

from oracles import coverage_gap_fine_grid, fine_grid_classify_bad, \
    phi_exhaustive
from test_dp_animal import random_instances


def _report(num, ok, detail):
    line = f"criterion {num:>2}: {'PASS' if ok else 'FAIL'} ({detail})"
    print(line)
    return line


@pytest.fixture(scope="module")
def speed_curve_outcome():
    spec = ExperimentSpec(
        preset="speed_curve",
        model=ModelConfig.solomon(0.7, 1.0),
        t=5000.0, replicas=200, base_seed=4201,
        options={"mus": [0.5, 1.0, 2.0, 4.0, 8.0, 16.0],
                 "max_events": 10 ** 9})
    return run_experiment(spec)


def test_criterion_01_field_stationarity():
    # 4001 site counts at each of three times = 12003 sampled sites per
    # seed, all tested against the nominal product law
    config = ModelConfig.solomon(0.7, 4.0)
    passes = 0
    for k in range(100):
        fld = ParticleField(config, 2000, derive_seed(4101, k))
        ok = True
        for t in (10.0, 50.0, 200.0):
            fld.advance_to(t)
            _, _, pval = poisson_gof(fld.site_count, 4.0)
            ok = ok and pval >= 0.01
        passes += ok
    line = _report(1, passes >= 95,
                   f"{passes}/100 seeds pass chi-square at 0.01")
    assert passes >= 95, line


def test_criterion_02_speed_approaches_occupied_drift(speed_curve_outcome):
    out = speed_curve_outcome
    cells = [out.summary["cells"][k] for k in out.result.keys()]
    cells.sort(key=lambda c: c["mu"])
    assert all(c["ok"] == 200 for c in cells)
    errs = [abs(c["v_hat"] - 0.4) for c in cells]
    ses = [c["se_speed"] for c in cells]
    monotone = all(
        errs[k] <= errs[k - 1] + 3.0 * (ses[k] + ses[k - 1])
        for k in range(1, len(errs)))
    final = errs[-1]
    ok = monotone and final < 0.05
    line = _report(2, ok,
                   f"|v-0.4| along grid {['%.4f' % e for e in errs]}, "
                   f"final {final:.4f} < 0.05")
    assert ok, line


def test_criterion_03_generator_decomposition(speed_curve_outcome):
    out = speed_curve_outcome
    cells = out.summary["cells"]
    worst_gap = max(c["decomposition_gap"] / c["decomposition_se"]
                    for c in cells.values())
    worst_resid = max(c["mean_abs_residual_over_t"] for c in cells.values())
    ok = (all(c["decomposition_ok"] for c in cells.values())
          and all(c["residual_ok"] for c in cells.values()))
    line = _report(3, ok,
                   f"max gap {worst_gap:.2f} se (<=3), max residual/t "
                   f"{worst_resid:.2e} (< {3 / math.sqrt(5000):.2e})")
    assert ok, line


def test_criterion_04_static_phase_diagram():
    spec = ExperimentSpec(
        preset="static_solomon",
        model=ModelConfig.solomon(0.7, 0.7, mode=FROZEN),
        t=1e5, replicas=100, base_seed=4401,
        options={"mus": [0.1, 0.7, 2.0]})
    cells = run_experiment(spec).summary["cells"]
    neg = cells["p=0.7,mu=0.1"]["sign_class"] == "negative"
    pos = cells["p=0.7,mu=2"]["sign_class"] == "positive"
    mid = cells["p=0.7,mu=0.7"]
    small = abs(mid["v_hat"]) < 0.02

    # same replica seeds, doubled horizon: the middle estimate may not
    # drift away from zero beyond the joint confidence width
    doubled = run_experiment(spec.with_overrides(
        t=2e5, options={"mus": [0.7]}))
    mid2 = doubled.summary["cells"]["p=0.7,mu=0.7"]
    half = mid["ci99_speed"][1] - mid["v_hat"]
    half2 = mid2["ci99_speed"][1] - mid2["v_hat"]
    stable = abs(mid2["v_hat"]) <= abs(mid["v_hat"]) + half + half2

    ok = neg and pos and small and stable
    line = _report(4, ok,
                   f"signs -/+ at mu 0.1/2.0: {neg}/{pos}, |v(0.7)| "
                   f"{abs(mid['v_hat']):.4f} < 0.02, t-doubling "
                   f"{abs(mid2['v_hat']):.4f} vs {abs(mid['v_hat']):.4f}")
    assert ok, line


def test_criterion_05_itinerary_dp_equals_enumeration():
    mismatches = 0
    for bad, col_lo, ell in random_instances(200, seed=4501):
        if phi_sup_array(bad, col_lo, ell) != \
                phi_exhaustive(bad, col_lo, ell):
            mismatches += 1
    line = _report(5, mismatches == 0,
                   f"{mismatches}/200 DP-vs-enumeration mismatches")
    assert mismatches == 0, line


def test_criterion_06_classifier_equals_fine_grid():
    rng = np.random.default_rng(4601)
    mismatched = 0
    bad_seen = good_seen = 0
    for k in range(100):
        mu = float(rng.uniform(1.5, 9.0))
        t1 = 64.0 if k % 5 else 128.0
        params = RenormParams(c0=2, gamma0=0.1, r=1, mu=mu)
        config = ModelConfig.solomon(0.7, mu)
        grid = BlockGrid(params, t1, space_bound=64)
        log = record_field_log(ParticleField(config, 320, derive_seed(4601, k)),
                               t1)
        cls = classify_blocks(log, grid)
        lib_bad = {b for b in grid.blocks() if cls.is_bad(*b)}
        if lib_bad != fine_grid_classify_bad(log, grid):
            mismatched += 1
        bad_seen += len(lib_bad)
        good_seen += len(list(grid.blocks())) - len(lib_bad)
    assert bad_seen and good_seen  # both labels actually exercised
    line = _report(6, mismatched == 0,
                   f"{mismatched}/100 logs disagree "
                   f"({bad_seen} bad / {good_seen} good blocks)")
    assert mismatched == 0, line


def test_criterion_07_coverage_exactness_and_closed_loop():
    # exactness: live interval-union verdict vs replayed fine grid on
    # 100 tiny instances (20 fields x 5 columns)
    mismatched = 0
    rng = np.random.default_rng(4701)
    for k in range(20):
        mu = float(rng.uniform(0.5, 3.5))
        seed = derive_seed(4701, k)
        params = RenormParams(c0=2, gamma0=0.1, r=0, mu=mu)
        config = ModelConfig.solomon(0.7, mu)
        grid = BlockGrid(params, 2.0, space_bound=4)
        log = record_field_log(ParticleField(config, 16, seed), 2.0)
        for i in range(-2, 3):
            fld = ParticleField(config, 16, seed)
            handle = fld.tag_and_track(grid.vee(i))
            fld.advance_to(2.0)
            gap, _ = coverage_event(handle, grid, i, 1)
            handle.release()
            if gap != coverage_gap_fine_grid(log, grid, i, 1):
                mismatched += 1

    # closed loop: the density the cover estimate prescribes must push
    # the conditional gap probability under its design target
    params = RenormParams(c0=2, gamma0=0.1, r=0, mu=1.0)
    f_hat = estimate_f_r(params, replicas=400, seed=4702,
                         scenarios=("uniform",))["uniform"].f_hat
    mu1 = mu_one(f_hat, params.gamma0, 0.1)
    cond = conditional_coverage(dataclasses.replace(params, mu=float(mu1)),
                                replicas=400, seed=4703)
    loop_ok = cond.p_gap_given_pedestal <= 0.1 + 2.0 * cond.se

    ok = mismatched == 0 and loop_ok
    line = _report(7, ok,
                   f"{mismatched}/100 verdict mismatches; at mu1="
                   f"{mu1:.1f}: P(gap|pedestal)="
                   f"{cond.p_gap_given_pedestal:.4f} <= 0.1+2se")
    assert ok, line


def test_criterion_08_tail_bounds():
    violations = sum(
        1 for c in range(10, 10001)
        if chernoff_bound(c, 0.5) < poisson_cdf_exact(c // 2, c))

    # the jump clock is a rate-1 Poisson process whatever the field
    # does, so the empty field gives the exact law of the jump count
    config = ModelConfig.solomon(0.7, 0.0)
    box = default_box_radius(100.0)
    over = 0
    for k in range(10_000):
        fld = ParticleField(config, box, derive_seed(4801, k, 11))
        path, _ = simulate_green(fld, config, 100.0,
                                 derive_seed(4801, k, 12))
        over += path.n_jumps > 200
    freq = over / 10_000
    ok = violations == 0 and freq < 1e-3
    line = _report(8, ok,
                   f"{violations} bound violations on [10, 1e4]; "
                   f"jump-budget overflow frequency {freq:.1e} < 1e-3")
    assert ok, line


def test_criterion_09_visited_block_animal():
    params = RenormParams(c0=2, gamma0=0.1, r=1, mu=1.0)
    config = ModelConfig.solomon(0.7, 1.0)
    grid = BlockGrid(params, 1e4)
    box = default_box_radius(1e4)
    layer_slots = int(1e4) // params.delta + 1
    violations = 0
    for k in range(1000):
        fld = ParticleField(config, box, derive_seed(4901, k, 11))
        path, _ = simulate_green(fld, config, 1e4,
                                 derive_seed(4901, k, 12),
                                 max_events=10 ** 9)
        try:
            animal = lattice_animal(path, grid)  # raises if disconnected
        except RuntimeError:
            violations += 1
            continue
        if len(animal) > path.n_jumps + layer_slots:
            violations += 1
    line = _report(9, violations == 0,
                   f"{violations}/1000 paths violate connectivity, origin "
                   "membership, or the size bound")
    assert violations == 0, line


def test_criterion_10_tail_frequencies_fall_with_density():
    params = RenormParams(c0=2, gamma0=0.1, r=1, mu=1.0)
    config = ModelConfig.solomon(0.7, 1.0)
    spec = TailSpec(t=1e4, mus=(1.0, 16.0), replicas=200, base_seed=4001,
                    phi_cols=8, max_events=2_000_000_000)
    report = measure_block_tails(config, params, spec)
    sparse = report["cells"][
        "mu=1,r=1,C0=2,eps0=0.01,eps1=0.1"]
    dense = report["cells"][
        "mu=16,r=1,C0=2,eps0=0.01,eps1=0.1"]
    for cell in (sparse, dense):
        assert cell["n_ok"] + cell["breaches"] + cell["truncations"] == 200
        assert cell["unverified_blocks"] == 0
    drops = {ev: (sparse["freq"][ev], dense["freq"][ev])
             for ev in ("phi", "gamma_bad", "lambda")}
    ok = all(hi >= lo for hi, lo in drops.values())
    line = _report(10, ok,
                   "freq mu=1 -> mu=16: " + ", ".join(
                       f"{ev} {a:.3f}->{b:.3f}"
                       for ev, (a, b) in drops.items()))
    assert ok, line
