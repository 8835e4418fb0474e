"""Green-particle simulation and the generator/martingale bookkeeping.

The walker carries a rate-1 exponential clock.  At each jump instant the
displacement is drawn from the occupied kernel if its current site holds at
least one red particle, from the vacant kernel otherwise (departure-site
convention; a destination-site variant sits behind a config switch).  Field
and walker events form one exact merged stream.

Engines:

* ``windowed`` (default for dynamic d=1): the slab engine from _engine,
  which simulates the field exactly inside an adaptive site window around
  the walker and advances provably non-interacting far particles by their
  slab endpoints.  Identical in law to the full merged stream, and the only
  practical option at large mu.

* ``reference``: full-field merged stream, any dimension.  Slower; used for
  cross-checks and whenever d >= 2.

* frozen mode: the field never moves, only the walker's clock runs.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from . import _engine
from ._rng import derive_seed, xoshiro_state
from .environment import BudgetError, ParticleField, default_box_radius
from .model import FROZEN, Kernel, ModelConfig, build_alias

__all__ = [
    "BreachError", "GreenPath", "GeneratorTrace", "simulate_green",
    "empirical_speed", "rho_hat", "rho_hat_jumps", "martingale_residual",
    "run_static_solomon", "dump_path", "config_hash",
]


class BreachError(RuntimeError):
    """The walker left the safety window [-L/2, L/2]^d; replica discarded."""

    def __init__(self, t, position):
        super().__init__(f"walker breached the safety window at t={t:.6g}, "
                         f"position {position}")
        self.t = t
        self.position = position


@dataclass
class GreenPath:
    """Walker path on [0, t]: jump times, positions after each jump
    (origin start implicit), the occupancy flag seen at each jump, and the
    exact Lebesgue time spent on occupied sites."""
    jump_times: np.ndarray
    positions: np.ndarray
    saw_red: np.ndarray
    occupied_time: float
    t: float
    d: int = 1

    def __post_init__(self):
        if self.jump_times.shape[0] != self.positions.shape[0]:
            raise ValueError("jump_times and positions length mismatch")
        if not (0.0 <= self.occupied_time <= self.t * (1 + 1e-12)):
            raise ValueError("occupied_time outside [0, t]")

    @property
    def n_jumps(self) -> int:
        return int(self.jump_times.shape[0])

    @property
    def final_position(self):
        if self.n_jumps == 0:
            return 0 if self.d == 1 else np.zeros(self.d, dtype=np.int64)
        if self.d == 1:
            return int(self.positions[-1])
        return self.positions[-1].copy()


@dataclass
class GeneratorTrace:
    """Time integral of the occupancy-dependent drift and the leftover.

    drift_integral = v_occupied * occupied_time + v_vacant * (t - occupied),
    residual = final position - drift_integral; residual / t is the
    martingale term and vanishes like t^(-1/2).
    """
    drift_integral: np.ndarray
    residual: np.ndarray


def _kernel_tables(kernel: Kernel, d: int):
    accept, alias = build_alias(kernel)
    if d == 1:
        off = np.ascontiguousarray(kernel.offsets[:, 0])
    else:
        off = np.ascontiguousarray(kernel.offsets)
    return accept, alias, off


def _make_trace(config: ModelConfig, final_pos, occupied_time, t):
    vp = config.drift_occupied
    vpp = config.drift_vacant
    drift = vp * occupied_time + vpp * (t - occupied_time)
    pos = np.atleast_1d(np.asarray(final_pos, dtype=np.float64))
    return GeneratorTrace(drift_integral=drift, residual=pos - drift)


def simulate_green(field: ParticleField, config: ModelConfig, t: float,
                   seed, engine: str = "auto", max_events=None,
                   slab_width: float = 256.0):
    """Run the walker from the origin to horizon t inside the given field.

    The field is advanced in the same merged stream and ends at time t.
    Raises BreachError if the walker leaves [-L/2, L/2]^d and BudgetError on
    event-budget exhaustion.  Returns (GreenPath, GeneratorTrace).
    """
    if t <= 0:
        raise ValueError("horizon must be positive")
    if field.current_time != 0.0:
        raise ValueError("walker runs start from a fresh field at time 0")
    if config.mode != field.config.mode:
        raise ValueError("config mode disagrees with the field's")
    if config.d != field.d:
        raise ValueError("config dimension disagrees with the field's")
    if max_events is None:
        max_events = field.event_budget
    d = config.d

    if engine == "auto":
        if config.mode == FROZEN:
            engine = "frozen"
        elif d == 1:
            engine = "windowed"
        else:
            engine = "reference"
    if config.mode == FROZEN and engine != "frozen":
        engine = "frozen"

    if engine == "windowed":
        out = _windowed_run(field, config, float(t), float(t), seed,
                            int(max_events), float(slab_width))
        _raise_on_status(out.status, out)
        path = GreenPath(out.jump_t, out.jump_x, out.jump_saw,
                         min(out.occupied_time, float(t)), float(t), d=1)
        trace = _make_trace(config, path.final_position,
                            path.occupied_time, float(t))
        return path, trace

    occ_a, occ_al, occ_off = _kernel_tables(config.occupied, d)
    vac_a, vac_al, vac_off = _kernel_tables(config.vacant, d)
    rng_g = xoshiro_state(derive_seed(seed, 3))
    half_box = field.box_radius // 2

    cap = int(t + 12.0 * math.sqrt(t) + 64)
    jump_t = np.empty(cap, dtype=np.float64)
    jump_saw = np.empty(cap, dtype=np.int8)
    istate = np.zeros(8, dtype=np.int64)
    fstate = np.zeros(4, dtype=np.float64)

    if engine == "frozen":
        if d == 1:
            jump_x = np.empty(cap, dtype=np.int64)
            istate[_engine.I_GLIN] = field.box_radius
            _engine.walker_frozen_1d(
                field.site_count, rng_g, istate, fstate, float(t),
                half_box, occ_a, occ_al, occ_off, vac_a, vac_al, vac_off,
                config.decide_at_destination, jump_t, jump_x, jump_saw,
                int(max_events))
        else:
            jump_x = np.empty((cap, d), dtype=np.int64)
            istate_pos = np.zeros(1 + d, dtype=np.int64)
            istate_pos[0] = field.linear_index((0,) * d)
            _engine.walker_frozen_nd(
                field.site_count, rng_g, istate_pos, istate, fstate,
                float(t), half_box, occ_a, occ_al, occ_off, vac_a, vac_al,
                vac_off, config.decide_at_destination, jump_t, jump_x,
                jump_saw, int(max_events), field.dims, field.strides)
        field.current_time = fstate[_engine.F_TNOW]
    elif engine == "reference":
        if d == 1:
            jump_x = np.empty(cap, dtype=np.int64)
            istate[_engine.I_GLIN] = field.box_radius
            rec = np.empty(0, dtype=np.float64)
            reci = np.empty(0, dtype=np.int64)
            _engine.walker_reference_1d(
                field.positions, field.site_count, field.rng_state, rng_g,
                istate, fstate, float(t), half_box, occ_a, occ_al, occ_off,
                vac_a, vac_al, vac_off, config.decide_at_destination,
                jump_t, jump_x, jump_saw, int(max_events),
                False, rec, reci, reci, reci)
        else:
            jump_x = np.empty((cap, d), dtype=np.int64)
            istate_pos = np.zeros(1 + d, dtype=np.int64)
            istate_pos[0] = field.linear_index((0,) * d)
            _engine.walker_reference_nd(
                field.positions, field.site_count, field.rng_state, rng_g,
                istate_pos, istate, fstate, float(t), half_box, occ_a,
                occ_al, occ_off, vac_a, vac_al, vac_off,
                config.decide_at_destination, jump_t, jump_x, jump_saw,
                int(max_events), field.dims, field.strides)
        field.current_time = fstate[_engine.F_TNOW]
        # I_EVENTS counts field and walker transitions together; local
        # field bookkeeping only wants the red ones.
        field.event_count += int(istate[_engine.I_EVENTS] - istate[_engine.I_NJUMP])
    else:
        raise ValueError(f"unknown engine {engine!r}")

    nj = int(istate[_engine.I_NJUMP])
    status = int(istate[_engine.I_STATUS])
    result = _SimResult(jump_t[:nj].copy(), jump_x[:nj].copy(),
                        jump_saw[:nj].astype(bool),
                        fstate[_engine.F_OCC], fstate[_engine.F_TNOW])
    _raise_on_status(status, result)
    path = GreenPath(result.jump_t, result.jump_x, result.jump_saw,
                     min(result.occupied_time, float(t)), float(t), d=d)
    trace = _make_trace(config, path.final_position, path.occupied_time,
                        float(t))
    return path, trace


def _windowed_run(field: ParticleField, config: ModelConfig, t_green: float,
                  t_sweep: float, seed, max_events: int, slab_width: float,
                  setup=None):
    """Drive the slab engine directly.  The walker clock stops at t_green
    while the field sweep (and block analyzer, when a setup is given) runs
    on to t_sweep >= t_green.  Returns the raw engine outcome without
    raising, so callers can grade non-OK statuses themselves."""
    occ_a, occ_al, occ_off = _kernel_tables(config.occupied, 1)
    vac_a, vac_al, vac_off = _kernel_tables(config.vacant, 1)
    rng_g = xoshiro_state(derive_seed(seed, 3))
    rng_green = np.random.Generator(np.random.PCG64(derive_seed(seed, 4)))
    rng_slab = np.random.Generator(
        np.random.PCG64(derive_seed(field.seed, 3)))
    out = _engine.run_windowed_1d(
        field.positions, field.site_count, rng_slab, rng_green,
        field.rng_state, rng_g, float(t_green), float(t_sweep),
        field.box_radius // 2, occ_a, occ_al, occ_off,
        vac_a, vac_al, vac_off, config.decide_at_destination,
        config.max_jump_range, int(max_events), float(slab_width),
        setup=setup)
    field.current_time = out.t_reached
    field.event_count += out.events - out.jump_t.shape[0]
    return out


@dataclass
class _SimResult:
    jump_t: np.ndarray
    jump_x: np.ndarray
    jump_saw: np.ndarray
    occupied_time: float
    t_reached: float


def _raise_on_status(status, result):
    if status == _engine.OK:
        return
    if status == _engine.BREACH:
        pos = result.jump_x[-1] if result.jump_x.shape[0] else 0
        raise BreachError(result.t_reached, pos)
    if status == _engine.BUDGET:
        raise BudgetError(
            f"event budget exhausted at t={result.t_reached:.6g}")
    if status == _engine.HISTORY_MISS:
        raise RuntimeError("analyzer window history miss (internal)")
    raise RuntimeError(f"engine status {status}")


# ---------------------------------------------------------------------------
# path statistics
# ---------------------------------------------------------------------------

def empirical_speed(path: GreenPath):
    """Final position divided by the horizon."""
    if path.d == 1:
        return path.final_position / path.t
    return np.asarray(path.final_position, dtype=np.float64) / path.t


def rho_hat(path: GreenPath) -> float:
    """Fraction of time the walker's site was occupied."""
    return path.occupied_time / path.t


def rho_hat_jumps(path: GreenPath) -> float:
    """Fraction of jumps that used the occupied kernel (diagnostic)."""
    if path.n_jumps == 0:
        return 0.0
    return float(np.mean(path.saw_red))


def martingale_residual(trace: GeneratorTrace, t: float):
    res = trace.residual / t
    return float(res[0]) if res.shape[0] == 1 else res


# ---------------------------------------------------------------------------
# static (frozen) phase measurements
# ---------------------------------------------------------------------------

@dataclass
class StaticSummary:
    p: float
    mu: float
    t: float
    replicas: int
    breaches: int
    mean_speed: float
    se_speed: float
    sign_class: str
    ci99: tuple
    mean_rho: float
    speeds: np.ndarray = dataclass_field(repr=False, default=None)


def run_static_solomon(p: float, mu: float, t: float, replicas: int, seed,
                       box_radius=None) -> StaticSummary:
    """Frozen-field speed measurement with Solomon kernels.

    Classifies the sign of the mean speed from a 99% t-interval: negative
    if the interval lies below 0, positive if above, zero-consistent
    otherwise.
    """
    from scipy import stats as sstats

    config = ModelConfig.solomon(p, mu, mode=FROZEN)
    if box_radius is None:
        box_radius = default_box_radius(t)
    speeds = []
    rhos = []
    breaches = 0
    for i in range(replicas):
        fld = ParticleField(config, box_radius, derive_seed(seed, i, 11))
        try:
            path, _ = simulate_green(fld, config, t,
                                     derive_seed(seed, i, 12))
        except BreachError:
            breaches += 1
            continue
        speeds.append(empirical_speed(path))
        rhos.append(rho_hat(path))
    speeds = np.asarray(speeds, dtype=np.float64)
    n = speeds.shape[0]
    if n < 2:
        raise RuntimeError("not enough surviving replicas")
    mean = float(speeds.mean())
    se = float(speeds.std(ddof=1) / math.sqrt(n))
    q = sstats.t.ppf(0.995, n - 1)
    lo, hi = mean - q * se, mean + q * se
    if hi < 0:
        cls = "negative"
    elif lo > 0:
        cls = "positive"
    else:
        cls = "zero-consistent"
    return StaticSummary(p=p, mu=mu, t=t, replicas=replicas,
                         breaches=breaches, mean_speed=mean, se_speed=se,
                         sign_class=cls, ci99=(lo, hi),
                         mean_rho=float(np.mean(rhos)), speeds=speeds)


# ---------------------------------------------------------------------------
# dumps
# ---------------------------------------------------------------------------

def config_hash(config: ModelConfig) -> str:
    blob = json.dumps(config.to_dict(), sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def dump_path(path: GreenPath, trace: GeneratorTrace, config: ModelConfig,
              seed, base):
    """Write <base>.csv with the jumps and <base>.json with run metadata."""
    cols = "xyz"[:path.d] if path.d <= 3 else [f"x{a}" for a in range(path.d)]
    csv_path = f"{base}.csv"
    with open(csv_path, "w") as fh:
        fh.write("jump_index,time," + ",".join(cols) + ",saw_red\n")
        for k in range(path.n_jumps):
            if path.d == 1:
                xs = str(int(path.positions[k]))
            else:
                xs = ",".join(str(int(v)) for v in path.positions[k])
            fh.write(f"{k},{path.jump_times[k]!r},{xs},"
                     f"{int(path.saw_red[k])}\n")
    meta = {
        "schema": 1,
        "config_hash": config_hash(config),
        "seed": seed,
        "t": path.t,
        "n_jumps": path.n_jumps,
        "occupied_time": path.occupied_time,
        "speed": (empirical_speed(path) if path.d == 1
                  else list(np.asarray(empirical_speed(path)))),
        "residual_over_t": (list(np.asarray(trace.residual / path.t))),
    }
    with open(f"{base}.json", "w") as fh:
        json.dump(meta, fh, indent=1, sort_keys=True)
    return csv_path
