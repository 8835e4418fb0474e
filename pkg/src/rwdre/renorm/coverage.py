"""Block coverage by tagged particles and the full-cover probability.

A block (i, j) is covered when every site of its spatial range is
occupied at every instant of its time layer by at least one particle that
sat in V(i) at the pedestal time.  Trajectories are piecewise constant,
so the per-site occupancy intervals from a tracking handle decide the
event exactly; the fine-grid scan is a test-only oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .._rng import derive_seed
from ..environment import ParticleField, TrackingError
from ..harness.stats import wilson_interval
from ..model import ModelConfig
from .grid import BlockGrid
from .params import RenormParams

_GAP_TOL = 1e-9


def coverage_event(handle, grid: BlockGrid, i: int, j: int):
    """(gap exists?, witness) for block (i, j) under the handle's tags.

    The handle must have been registered at the block's pedestal time and
    its field advanced through the layer end; particles tagged elsewhere
    than V(i) would make the verdict meaningless, so the tag time is
    checked and the span check is delegated to the handle.
    """
    (_, _), t_ped = grid.pedestal(i, j)
    if abs(handle.t0 - t_ped) > _GAP_TOL:
        raise TrackingError(
            f"handle tagged at t={handle.t0}, block ({i},{j}) pedestal "
            f"sits at t={t_ped}")
    delta = grid.delta
    t_lo = float(j * delta)
    t_hi = float((j + 1) * delta)
    fld = handle.field
    for x in range(i * delta, (i + 1) * delta):
        cur = t_lo
        for a, b in handle.occupancy_intervals(fld.linear_index(x),
                                               t_lo, t_hi):
            if a > cur + _GAP_TOL:
                return True, (x, cur)
            cur = max(cur, b)
        if cur < t_hi - _GAP_TOL:
            return True, (x, cur)
    return False, None


def pedestal_event(snapshot, grid: BlockGrid, i: int, j: int) -> bool:
    """Whether V(i) holds at least gamma_0 * mu * delta particles at the
    pedestal time."""
    (x_lo, x_hi), t_ped = grid.pedestal(i, j)
    if abs(snapshot.time - t_ped) > _GAP_TOL:
        raise ValueError(
            f"snapshot at t={snapshot.time}, pedestal at t={t_ped}")
    return snapshot.window_sum(x_lo, x_hi) >= grid.params.pedestal_threshold


@dataclass(frozen=True)
class CoverageEstimate:
    scenario: str
    n_particles: int
    replicas: int
    covered: int
    f_hat: float
    ci95: tuple


def _seed_block_field(params: RenormParams, n: int, scenario: str, seed):
    """Empty field plus n hand-placed particles in V(0)."""
    delta = params.delta
    v_lo, v_hi = -3 * delta, 4 * delta
    spread = int(math.ceil(6.0 * math.sqrt(2.0 * delta))) + 8
    box = 4 * delta + spread
    # the walker never runs here; any valid kernel pair will do
    config = ModelConfig.solomon(0.7, 0.0)
    fld = ParticleField(config, box, seed)
    rng = np.random.Generator(np.random.PCG64(derive_seed(seed, 7)))
    if scenario == "uniform":
        lat = rng.integers(v_lo, v_hi, size=n)
    elif scenario == "corner":
        lat = np.full(n, v_lo, dtype=np.int64)
    else:
        raise ValueError(f"unknown scenario {scenario!r}")
    fld.positions = (lat + box).astype(np.int64)
    fld.site_count = np.bincount(fld.positions,
                                 minlength=fld.size).astype(np.int64)
    return fld


def estimate_f_r(params: RenormParams, replicas: int, seed, r=None,
                 scenarios=("uniform", "corner"), n_particles=None):
    """Monte Carlo estimate of the full-cover probability f(r).

    Exactly 8 * delta particles (overridable for small exact cross-checks)
    start in V(0), evolve freely over two layers, and the block (0, 1) is
    checked for a coverage gap.  Returns {scenario: CoverageEstimate}.
    """
    if r is not None and r != params.r:
        params = replace(params, r=r)
    delta = params.delta
    n = 8 * delta if n_particles is None else int(n_particles)
    grid = BlockGrid(params, t=2 * delta)
    out = {}
    for scenario in scenarios:
        covered = 0
        for k in range(replicas):
            fld = _seed_block_field(params, n, scenario,
                                    derive_seed(seed, k, 41))
            handle = fld.tag_and_track((-3 * delta, 4 * delta))
            fld.advance_to(2.0 * delta)
            gap, _ = coverage_event(handle, grid, 0, 1)
            handle.release()
            if not gap:
                covered += 1
        f_hat = covered / replicas
        out[scenario] = CoverageEstimate(
            scenario=scenario, n_particles=n, replicas=replicas,
            covered=covered, f_hat=f_hat,
            ci95=wilson_interval(covered, replicas))
    return out


def mu_one(f_hat: float, gamma_0: float, eps_1: float) -> float:
    """Density above which the conditional gap probability drops to eps_1,
    given the full-cover estimate."""
    if not 0.0 < f_hat < 1.0:
        raise ValueError("f_hat must be strictly inside (0, 1)")
    if not 0.0 < eps_1 < 1.0:
        raise ValueError("eps_1 must be strictly inside (0, 1)")
    return (8.0 / gamma_0) * (1.0 + math.log(eps_1) / math.log(1.0 - f_hat))


@dataclass(frozen=True)
class ConditionalCoverage:
    mu: float
    replicas: int
    pedestal_count: int
    joint_count: int
    p_gap_given_pedestal: float
    se: float
    ci95: tuple


def conditional_coverage(params: RenormParams, replicas: int, seed,
                         box_radius=None) -> ConditionalCoverage:
    """P(coverage gap | pedestal event) at the params' density, measured
    on block (0, 1) over fresh equilibrium fields."""
    delta = params.delta
    if box_radius is None:
        spread = int(math.ceil(6.0 * math.sqrt(2.0 * delta))) + 16
        box_radius = 4 * delta + spread
    config = ModelConfig.solomon(0.7, params.mu)
    grid = BlockGrid(params, t=2 * delta)
    n_ped = 0
    n_joint = 0
    for k in range(replicas):
        fld = ParticleField(config, box_radius, derive_seed(seed, k, 42))
        snap = fld.snapshot_window(grid.vee(0))
        ped = pedestal_event(snap, grid, 0, 1)
        handle = fld.tag_and_track((-3 * delta, 4 * delta))
        fld.advance_to(2.0 * delta)
        gap, _ = coverage_event(handle, grid, 0, 1)
        handle.release()
        if ped:
            n_ped += 1
            if gap:
                n_joint += 1
    if n_ped == 0:
        raise RuntimeError("pedestal event never occurred; raise replicas")
    p = n_joint / n_ped
    se = math.sqrt(max(p * (1 - p), 1e-12) / n_ped)
    return ConditionalCoverage(
        mu=params.mu, replicas=replicas, pedestal_count=n_ped,
        joint_count=n_joint, p_gap_given_pedestal=p, se=se,
        ci95=wilson_interval(n_joint, n_ped))
