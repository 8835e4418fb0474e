"""Red-particle field: exact event-driven simulation on a torus.

The field starts from i.i.d. Poisson(mu) site counts and evolves as
independent rate-1 simple random walks, simulated with one aggregated
exponential clock (rate = particle count, uniform particle choice).  On the
torus the product Poisson measure is exactly invariant, so the field law is
exact at every time; the finite box only matters through wrap-around
correlations, which the default box radius pushes far beyond anything a
desk-scale walker can feel.

Positions are stored as linear site indices together with a dense count
array per site.  The dense array replaces a hash map: in the regimes this
package targets (d = 1, mu >= 0.1) the torus is small relative to the
particle count and O(1) array indexing beats hashing on every query.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from . import _engine
from ._rng import derive_seed, xoshiro_state
from .model import DYNAMIC, FROZEN, ModelConfig

SNAPSHOT_SCHEMA = 1

DEFAULT_PARTICLE_BUDGET = 100_000_000
DEFAULT_EVENT_BUDGET = 100_000_000


class BudgetError(RuntimeError):
    """A resource guard tripped (particle count or event count)."""


class TrackingError(RuntimeError):
    """Trajectory logs do not cover the requested span."""


def default_box_radius(t: float) -> int:
    """Box radius making wrap-around effects negligible up to time t.

    The walker makes about t jumps and red excursions concentrate at scale
    sqrt(t); the extra log factor buys room for every replica in a large
    batch.
    """
    t = max(float(t), 1.0)
    return int(math.ceil(t + 6.0 * math.sqrt(t * math.log(t + 2.0)) + 64.0))


class ParticleField:
    """Mutable field state; one instance per replica, never shared.

    positions holds linear site indices into a torus with (2L+1) sites per
    axis; site_count is the exact multiset tally of positions at all times.
    """

    def __init__(self, config: ModelConfig, box_radius: int, seed,
                 particle_budget: int = DEFAULT_PARTICLE_BUDGET,
                 event_budget: int = DEFAULT_EVENT_BUDGET):
        if box_radius < 1:
            raise ValueError("box_radius must be >= 1")
        self.config = config
        self.d = config.d
        self.box_radius = int(box_radius)
        self.side = 2 * self.box_radius + 1
        self.size = self.side ** self.d
        self.seed = seed
        self.event_budget = int(event_budget)
        expected = config.mu * self.size
        if expected > particle_budget:
            raise BudgetError(
                f"expected particle count {expected:.3g} exceeds budget "
                f"{particle_budget:.3g}")
        init_rng = np.random.Generator(
            np.random.PCG64(derive_seed(seed, 1)))
        counts = init_rng.poisson(config.mu, self.size)
        if int(counts.sum()) > particle_budget:
            raise BudgetError("realized particle count exceeds budget")
        self.site_count = counts.astype(np.int64)
        self.positions = np.repeat(
            np.arange(self.size, dtype=np.int64), counts)
        self.current_time = 0.0
        self.event_count = 0
        self.rng_state = xoshiro_state(derive_seed(seed, 2))
        if self.d > 1:
            self.dims = np.full(self.d, self.side, dtype=np.int64)
            strides = np.ones(self.d, dtype=np.int64)
            for a in range(self.d - 2, -1, -1):
                strides[a] = strides[a + 1] * self.side
            self.strides = strides
        self._tracking = None

    # -- coordinate helpers ------------------------------------------------

    def linear_index(self, x):
        """Lattice coordinates (int or d-tuple, each in [-L, L]) to the
        linear site index."""
        L = self.box_radius
        if self.d == 1:
            xi = int(x[0]) if isinstance(x, (tuple, list, np.ndarray)) else int(x)
            if not -L <= xi <= L:
                raise ValueError(f"coordinate {xi} outside torus [-{L}, {L}]")
            return xi + L
        if len(x) != self.d:
            raise ValueError("coordinate dimension mismatch")
        idx = 0
        for a, xa in enumerate(x):
            xa = int(xa)
            if not -L <= xa <= L:
                raise ValueError(f"coordinate {xa} outside torus [-{L}, {L}]")
            idx += (xa + L) * int(self.strides[a])
        return idx

    def lattice_coords(self, idx):
        L = self.box_radius
        if self.d == 1:
            return int(idx) - L
        out = []
        for a in range(self.d):
            out.append(int((idx // self.strides[a]) % self.side) - L)
        return tuple(out)

    @property
    def n_particles(self) -> int:
        return int(self.positions.shape[0])

    # -- dynamics ----------------------------------------------------------

    def advance_to(self, t: float) -> None:
        """Run the aggregated event process up to time t (exact in law).

        Frozen mode moves nothing but still advances the clock.  While a
        tracking handle is active every event is also appended to its log.
        """
        if t < self.current_time:
            raise ValueError(
                f"cannot advance backwards: {t} < {self.current_time}")
        if self.config.mode == FROZEN or self.n_particles == 0:
            self.current_time = float(t)
            return
        if self._tracking is not None:
            self._advance_recording(float(t))
            return
        budget = self.event_budget - self.event_count
        if self.d == 1:
            t_new, events, status = _engine.advance_field_1d(
                self.positions, self.site_count, self.rng_state,
                self.current_time, float(t), budget)
        else:
            t_new, events, status = _engine.advance_field_nd(
                self.positions, self.site_count, self.rng_state,
                self.current_time, float(t), budget, self.dims, self.strides)
        self.current_time = t_new
        self.event_count += events
        if status == _engine.BUDGET:
            raise BudgetError(
                f"event budget {self.event_budget} exhausted at "
                f"t={self.current_time}")

    def _advance_recording(self, t: float) -> None:
        if self.d != 1:
            raise NotImplementedError("tracking is implemented for d=1")
        log = self._tracking
        while self.current_time < t:
            budget = self.event_budget - self.event_count
            if budget <= 0:
                raise BudgetError(
                    f"event budget {self.event_budget} exhausted at "
                    f"t={self.current_time}")
            chunk = int(min(
                budget,
                max(1024, 1.5 * self.n_particles * (t - self.current_time))))
            ev_t = np.empty(chunk, dtype=np.float64)
            ev_pid = np.empty(chunk, dtype=np.int64)
            ev_src = np.empty(chunk, dtype=np.int64)
            ev_dst = np.empty(chunk, dtype=np.int64)
            t_new, events, status = _engine.advance_field_1d_record(
                self.positions, self.site_count, self.rng_state,
                self.current_time, t, budget, ev_t, ev_pid, ev_src, ev_dst)
            log.append(ev_t[:events], ev_pid[:events], ev_src[:events],
                       ev_dst[:events])
            self.current_time = t_new
            self.event_count += events
            if status == _engine.BUDGET:
                raise BudgetError(
                    f"event budget {self.event_budget} exhausted at "
                    f"t={self.current_time}")
            # CAPACITY just means the chunk filled; loop continues

    # -- queries -----------------------------------------------------------

    def occupancy(self, x) -> int:
        return int(self.site_count[self.linear_index(x)])

    def snapshot_window(self, window) -> "FieldSnapshot":
        """Exact counts over the half-open lattice window [lo, hi) (d=1)."""
        lo, hi = int(window[0]), int(window[1])
        if hi <= lo:
            raise ValueError("empty window")
        if hi - lo > self.size:
            raise ValueError("window exceeds torus")
        if self.d != 1:
            raise NotImplementedError("windows are implemented for d=1")
        idx = (np.arange(lo, hi, dtype=np.int64) + self.box_radius) % self.size
        return FieldSnapshot(self.current_time, lo, hi,
                             self.site_count[idx].copy(),
                             d=self.d, box_radius=self.box_radius,
                             mu=self.config.mu, seed=self.seed)

    def tag_and_track(self, region, from_time=None) -> "TrackHandle":
        """Tag all particles inside the half-open region [lo, hi) now and
        log every field event until the handle is released.

        Particle ids are positional indices, stable for the lifetime of the
        field.
        """
        if from_time is None:
            from_time = self.current_time
        if abs(from_time - self.current_time) > 1e-9:
            raise ValueError("field must be advanced to from_time first")
        if self.d != 1:
            raise NotImplementedError("tracking is implemented for d=1")
        lo, hi = int(region[0]), int(region[1])
        lat = self.positions - self.box_radius
        ids = np.nonzero((lat >= lo) & (lat < hi))[0].astype(np.int64)
        if self._tracking is None:
            self._tracking = TrackHandle(self, self.current_time)
        elif abs(self._tracking.t0 - self.current_time) > 1e-9:
            # start positions are recorded at the handle's t0; registering
            # later particles would corrupt interval reconstruction
            raise TrackingError("a tracking handle is already active; "
                                "release it before tagging again")
        self._tracking.register(ids, self.positions[ids].copy())
        return self._tracking


class TrackHandle:
    """Event log plus the tagged id set; supports trajectory replay."""

    def __init__(self, field: ParticleField, t0: float):
        self.field = field
        self.t0 = t0
        self.tagged = np.empty(0, dtype=np.int64)
        self._start_pos = {}
        self._chunks = []

    def register(self, ids, start_positions):
        self.tagged = np.union1d(self.tagged, ids)
        for i, p in zip(ids, start_positions):
            self._start_pos.setdefault(int(i), int(p))

    def append(self, ev_t, ev_pid, ev_src, ev_dst):
        if ev_t.shape[0]:
            self._chunks.append((ev_t.copy(), ev_pid.copy(), ev_src.copy(),
                                 ev_dst.copy()))

    def release(self):
        if self.field._tracking is self:
            self.field._tracking = None

    def _events(self):
        if not self._chunks:
            e = np.empty(0)
            return e, e.astype(np.int64), e.astype(np.int64), e.astype(np.int64)
        ts = np.concatenate([c[0] for c in self._chunks])
        pid = np.concatenate([c[1] for c in self._chunks])
        src = np.concatenate([c[2] for c in self._chunks])
        dst = np.concatenate([c[3] for c in self._chunks])
        return ts, pid, src, dst

    def trajectory(self, pid: int):
        """(times, linear sites) for one tagged particle, starting with its
        position at the tagging time."""
        pid = int(pid)
        if pid not in self._start_pos:
            raise TrackingError(f"particle {pid} is not tagged")
        ts, pids, _, dst = self._events()
        mask = pids == pid
        times = np.concatenate(([self.t0], ts[mask]))
        sites = np.concatenate(([self._start_pos[pid]], dst[mask]))
        return times, sites

    def occupancy_intervals(self, x_linear: int, t_lo: float, t_hi: float):
        """Union of time intervals in [t_lo, t_hi) during which at least one
        tagged particle sits at the given linear site.  Exact: trajectories
        are piecewise constant between logged events."""
        if t_lo < self.t0 - 1e-9:
            raise TrackingError(
                f"log starts at {self.t0}, requested {t_lo}")
        if t_hi > self.field.current_time + 1e-9:
            raise TrackingError(
                f"log ends at {self.field.current_time}, requested {t_hi}")
        ts, pids, src, dst = self._events()
        tag_set = set(int(i) for i in self.tagged)
        # sweep events in time order, maintaining the tagged count at x
        order = np.argsort(ts, kind="stable")
        count = sum(1 for i in self.tagged
                    if self._start_pos[int(i)] == x_linear)
        intervals = []
        open_from = self.t0 if count > 0 else None
        for k in order:
            if int(pids[k]) not in tag_set:
                continue
            if src[k] == x_linear:
                count -= 1
                if count == 0 and open_from is not None:
                    intervals.append((open_from, float(ts[k])))
                    open_from = None
            elif dst[k] == x_linear:
                count += 1
                if count == 1:
                    open_from = float(ts[k])
        if open_from is not None:
            intervals.append((open_from, self.field.current_time))
        # clip to [t_lo, t_hi)
        out = []
        for a, b in intervals:
            a2, b2 = max(a, t_lo), min(b, t_hi)
            if b2 > a2:
                out.append((a2, b2))
        return out


# ---------------------------------------------------------------------------
# snapshots
# ---------------------------------------------------------------------------

@dataclass
class FieldSnapshot:
    """Counts over a half-open lattice window at a fixed time."""
    time: float
    lo: int
    hi: int
    counts: np.ndarray
    d: int = 1
    box_radius: int = 0
    mu: float = 0.0
    seed: object = None

    def count_at(self, x: int) -> int:
        if not self.lo <= x < self.hi:
            raise ValueError(f"{x} outside snapshot window")
        return int(self.counts[x - self.lo])

    def window_sum(self, lo: int, hi: int) -> int:
        if lo < self.lo or hi > self.hi:
            raise ValueError("range outside snapshot window")
        return int(self.counts[lo - self.lo:hi - self.lo].sum())

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# schema={SNAPSHOT_SCHEMA} d={self.d} "
                  f"L={self.box_radius} mu={self.mu!r} seed={self.seed}\n")
        buf.write("time,x,count\n")
        for i, c in enumerate(self.counts):
            buf.write(f"{self.time!r},{self.lo + i},{int(c)}\n")
        return buf.getvalue()

    def dump(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_csv())

    @classmethod
    def from_csv(cls, text: str) -> "FieldSnapshot":
        lines = text.strip().split("\n")
        header = {}
        if lines and lines[0].startswith("#"):
            for pair in lines[0][1:].split():
                k, v = pair.split("=", 1)
                header[k] = v
            lines = lines[1:]
        if int(header.get("schema", 1)) != SNAPSHOT_SCHEMA:
            raise ValueError(f"unsupported snapshot schema {header}")
        if lines and lines[0].startswith("time"):
            lines = lines[1:]
        times, xs, cs = [], [], []
        for ln in lines:
            a, b, c = ln.split(",")
            times.append(float(a))
            xs.append(int(b))
            cs.append(int(c))
        if not xs:
            raise ValueError("empty snapshot")
        lo = min(xs)
        counts = np.zeros(max(xs) - lo + 1, dtype=np.int64)
        for x, c in zip(xs, cs):
            counts[x - lo] = c
        mu = float(header.get("mu", "0") or 0)
        return cls(times[0], lo, lo + len(counts), counts,
                   d=int(header.get("d", 1)),
                   box_radius=int(header.get("L", 0)), mu=mu,
                   seed=header.get("seed"))

    @classmethod
    def load(cls, path) -> "FieldSnapshot":
        with open(path) as fh:
            return cls.from_csv(fh.read())


# ---------------------------------------------------------------------------
# module-level operation aliases
# ---------------------------------------------------------------------------

def init_poisson(config: ModelConfig, L: int, seed, **kw) -> ParticleField:
    return ParticleField(config, L, seed, **kw)


def advance_to(field: ParticleField, t: float) -> None:
    field.advance_to(t)


def occupancy(field: ParticleField, x) -> int:
    return field.occupancy(x)


def snapshot_window(field: ParticleField, window) -> FieldSnapshot:
    return field.snapshot_window(window)


def tag_and_track(field: ParticleField, region, from_time=None) -> TrackHandle:
    return field.tag_and_track(region, from_time)
