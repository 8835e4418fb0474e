"""Space-time block geometry at one scale.

All rectangles are half-open: a block covers [i*delta, (i+1)*delta) in
space and [j*delta, (j+1)*delta) in time.  The enlarged block spans the
seven-column interval V(i) = [(i-3)delta, (i+4)delta) and reaches one
layer back in time; its bottom edge is the pedestal.  Layers with j = 0
clamp the look-back at time 0, where the field starts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..model import ConfigError
from .params import RenormParams


def default_space_bound(t: float) -> int:
    """Path-class spatial range: |x| <= t*log(t)."""
    if t <= 1.0:
        return 1
    return int(math.ceil(t * math.log(t)))


@dataclass(frozen=True)
class BlockGrid:
    """Index set of blocks covering [-bound, bound] x [0, t)."""

    params: RenormParams
    t: float
    space_bound: int = None

    def __post_init__(self):
        if self.t <= 0:
            raise ConfigError(f"horizon must be positive, got {self.t!r}")
        if self.space_bound is None:
            object.__setattr__(self, "space_bound",
                               default_space_bound(self.t))
        if self.space_bound < 1:
            raise ConfigError("space_bound must be >= 1")

    @property
    def delta(self) -> int:
        return self.params.delta

    @property
    def n_layers(self) -> int:
        """Layers j = 0..n_layers-1 cover [0, t)."""
        return int(math.ceil(self.t / self.delta))

    @property
    def col_range(self) -> tuple:
        """Inclusive column index range intersecting [-bound, bound]."""
        lo = self.col_of(-self.space_bound)
        hi = self.col_of(self.space_bound)
        return lo, hi

    def col_of(self, x: int) -> int:
        """Block column containing site x (exact floor division)."""
        return int(x) // self.delta

    def layer_of(self, s: float) -> int:
        return int(math.floor(s / self.delta))

    def block(self, i: int, j: int) -> tuple:
        """(x_lo, x_hi, t_lo, t_hi) of the block rectangle."""
        d = self.delta
        return (i * d, (i + 1) * d, j * d, (j + 1) * d)

    def vee(self, i: int) -> tuple:
        """Spatial interval [(i-3)delta, (i+4)delta), exactly 7 columns."""
        d = self.delta
        return ((i - 3) * d, (i + 4) * d)

    def enlarged(self, i: int, j: int) -> tuple:
        """(x_lo, x_hi, t_lo, t_hi) of the enlarged block; t_lo clamps
        at 0 for the bottom layer."""
        x_lo, x_hi = self.vee(i)
        d = self.delta
        return (x_lo, x_hi, max(0, (j - 1) * d), (j + 1) * d)

    def pedestal(self, i: int, j: int) -> tuple:
        """((x_lo, x_hi), time) bottom edge of the enlarged block."""
        x_lo, x_hi = self.vee(i)
        return ((x_lo, x_hi), max(0, (j - 1) * self.delta))

    def q_window(self, x: int) -> tuple:
        """Counting window [x, x + c0^r)."""
        return (int(x), int(x) + self.params.q_len)

    def q_positions(self, i: int):
        """All integer x with the counting window inside V(i)."""
        x_lo, x_hi = self.vee(i)
        return range(x_lo, x_hi - self.params.q_len + 1)

    def blocks(self):
        lo, hi = self.col_range
        for i in range(lo, hi + 1):
            for j in range(self.n_layers):
                yield (i, j)

    def contains_block(self, i: int, j: int) -> bool:
        lo, hi = self.col_range
        return lo <= i <= hi and 0 <= j < self.n_layers


def u_r(snapshot, x: int, params: RenormParams) -> int:
    """Particles in the counting window [x, x + c0^r) of a snapshot."""
    lo, hi = x, x + params.q_len
    return snapshot.window_sum(lo, hi)


@dataclass(frozen=True)
class PathClass:
    """Admissible paths: at most ell jumps on [0, t], nearest-neighbor
    steps, every position within [-bound, bound]."""

    ell: int
    t: float
    space_bound: int = None

    def __post_init__(self):
        if self.ell < 0:
            raise ConfigError(f"jump budget must be >= 0, got {self.ell}")
        if self.t <= 0:
            raise ConfigError(f"horizon must be positive, got {self.t!r}")
        if self.space_bound is None:
            object.__setattr__(self, "space_bound",
                               default_space_bound(self.t))

    def admits(self, jump_times, positions) -> bool:
        """Exact membership test for a piecewise-constant path from the
        origin (positions are the values after each jump)."""
        jt = np.asarray(jump_times, dtype=np.float64)
        xs = np.asarray(positions, dtype=np.int64)
        if jt.shape[0] != xs.shape[0]:
            raise ValueError("jump_times and positions length mismatch")
        if jt.shape[0] > self.ell:
            return False
        if jt.shape[0] == 0:
            return True
        if jt[0] <= 0 or jt[-1] > self.t:
            return False
        if np.any(np.diff(jt) <= 0):
            return False
        steps = np.diff(np.concatenate(([0], xs)))
        if np.any(np.abs(steps) != 1):
            return False
        return bool(np.all(np.abs(xs) <= self.space_bound))
