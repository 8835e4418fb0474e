"""Good/bad and occupied/vacant labels from an explicit field event log.

This is the reference classifier: a pure function of the recorded
environment realization, used on desk-scale instances and as ground
truth for the streaming analyzer.  The window count U(x, .) is piecewise
constant in time, so sweeping the events while watching for threshold
crossings (plus a state scan at every layer boundary) computes the exact
continuous-time minimum over each enlarged block.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import BlockGrid


class LogError(ValueError):
    """Event log does not cover the requested grid."""


@dataclass
class FieldEventLog:
    """Replayable record of one environment realization on a lattice
    window [lo, hi), starting at time 0.

    counts0 are the site counts at time 0; start_pos the per-particle
    lattice positions (index = particle id); ev_* the time-ordered move
    events in lattice coordinates.
    """

    t1: float
    lo: int
    hi: int
    counts0: np.ndarray
    start_pos: np.ndarray
    ev_t: np.ndarray
    ev_pid: np.ndarray
    ev_src: np.ndarray
    ev_dst: np.ndarray

    def __post_init__(self):
        if self.counts0.shape[0] != self.hi - self.lo:
            raise LogError("counts0 does not match the window")
        order = np.argsort(self.ev_t, kind="stable")
        if not np.array_equal(order, np.arange(order.shape[0])):
            self.ev_t = self.ev_t[order]
            self.ev_pid = self.ev_pid[order]
            self.ev_src = self.ev_src[order]
            self.ev_dst = self.ev_dst[order]


def record_field_log(field, t1: float) -> FieldEventLog:
    """Advance a fresh field to t1 while recording every move."""
    if field.current_time != 0.0:
        raise ValueError("recording starts from a fresh field")
    if field.d != 1:
        raise NotImplementedError("event logs are recorded for d=1")
    L = field.box_radius
    start_pos = field.positions - L
    counts0 = field.site_count.copy()
    handle = field.tag_and_track((-L, L + 1))
    field.advance_to(t1)
    ts, pid, src, dst = handle._events()
    handle.release()
    return FieldEventLog(t1=float(t1), lo=-L, hi=L + 1,
                         counts0=counts0, start_pos=start_pos,
                         ev_t=ts, ev_pid=pid,
                         ev_src=src - L, ev_dst=dst - L)


@dataclass
class BlockClassification:
    """Labels over a block grid plus one witness per non-default label."""

    grid: BlockGrid
    bad: dict = field(default_factory=dict)       # (i,j) -> True
    vacant: dict = field(default_factory=dict)    # (i,j) -> True
    bad_witness: dict = field(default_factory=dict)     # (i,j) -> (x, s)
    vacant_witness: dict = field(default_factory=dict)  # (i,j) -> (x, s)

    def is_bad(self, i: int, j: int) -> bool:
        return (i, j) in self.bad

    def is_vacant(self, i: int, j: int) -> bool:
        return (i, j) in self.vacant

    def bad_array(self) -> np.ndarray:
        """(n_cols, n_layers) bool array over the grid's column range."""
        lo, hi = self.grid.col_range
        out = np.zeros((hi - lo + 1, self.grid.n_layers), dtype=bool)
        for (i, j) in self.bad:
            out[i - lo, j] = True
        return out

    def to_csv(self) -> str:
        lines = ["r,i,j,label,occupied,witness_x,witness_t"]
        r = self.grid.params.r
        for (i, j) in sorted(self.grid.blocks()):
            is_bad = self.is_bad(i, j)
            is_vac = self.is_vacant(i, j)
            label = "bad" if is_bad else "good"
            occ = "vacant" if is_vac else "occupied"
            if is_bad:
                wx, wt = self.bad_witness[(i, j)]
                lines.append(f"{r},{i},{j},{label},{occ},{wx},{wt!r}")
            elif is_vac:
                wx, wt = self.vacant_witness[(i, j)]
                lines.append(f"{r},{i},{j},{label},{occ},{wx},{wt!r}")
            else:
                lines.append(f"{r},{i},{j},{label},{occ},,")
        return "\n".join(lines) + "\n"

    def dump(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_csv())


def _check_coverage(log: FieldEventLog, grid: BlockGrid):
    need_t = grid.n_layers * grid.delta
    if log.t1 < need_t:
        raise LogError(
            f"log ends at t={log.t1}, classification needs [0, {need_t}]; "
            f"missing ({log.t1}, {need_t}]")
    lo_col, hi_col = grid.col_range
    need_lo = (lo_col - 3) * grid.delta
    need_hi = (hi_col + 4) * grid.delta
    if log.lo > need_lo or log.hi < need_hi:
        raise LogError(
            f"log covers [{log.lo}, {log.hi}), grid needs "
            f"[{need_lo}, {need_hi})")


def classify_blocks(log: FieldEventLog, grid: BlockGrid
                    ) -> BlockClassification:
    """Exact labels for every block of the grid.

    bad(i,j)  <=>  some integer window inside the enlarged block's space
    range stays strictly below the particle threshold at some instant of
    the enlarged time range.
    vacant(i,j)  <=>  some space-time point of the block itself is never
    occupied by a particle that sat in V(i) at the pedestal time.
    """
    _check_coverage(log, grid)
    out = BlockClassification(grid=grid)
    _classify_bad(log, grid, out)
    _classify_vacant(log, grid, out)
    return out


def _classify_bad(log: FieldEventLog, grid: BlockGrid,
                  out: BlockClassification):
    delta = grid.delta
    q = grid.params.q_len
    thr = grid.params.u_threshold
    n_layers = grid.n_layers
    lo_col, hi_col = grid.col_range
    x_min = (lo_col - 3) * delta
    x_max = (hi_col + 4) * delta - q           # last admissible window
    base = log.lo
    counts = log.counts0.astype(np.int64).copy()
    if q > 1:
        w = np.convolve(counts, np.ones(q, dtype=np.int64), mode="valid")
    else:
        w = counts.copy()
    # w[k] = counts[k] + ... + counts[k+q-1]; window start x = lo + k
    w_len = w.shape[0]

    def mark(x, s):
        # columns whose seven-column interval contains [x, x+q)
        i_lo = -((-(x + q)) // delta) - 4       # ceil((x+q)/delta) - 4
        i_hi = x // delta + 3
        jb = int(s // delta)
        for i in range(max(i_lo, lo_col), min(i_hi, hi_col) + 1):
            for j in (jb, jb + 1):
                if 0 <= j < n_layers and (i, j) not in out.bad:
                    out.bad[(i, j)] = True
                    out.bad_witness[(i, j)] = (int(x), float(s))

    def scan(s):
        for k in np.nonzero(w < thr)[0]:
            x = base + int(k)
            if x_min <= x <= x_max:
                mark(x, s)

    def apply_event(k):
        s = float(log.ev_t[k])
        src = int(log.ev_src[k]) - base
        dst = int(log.ev_dst[k]) - base
        counts[src] -= 1
        for kk in range(max(src - q + 1, 0), min(src, w_len - 1) + 1):
            w[kk] -= 1
            x = base + kk
            if w[kk] < thr and x_min <= x <= x_max:
                mark(x, s)
        counts[dst] += 1
        w[max(dst - q + 1, 0):min(dst, w_len - 1) + 1] += 1

    n_ev = log.ev_t.shape[0]
    pos = 0
    for b in range(n_layers):
        s_b = b * delta
        while pos < n_ev and log.ev_t[pos] <= s_b:
            apply_event(pos)
            pos += 1
        scan(float(s_b))
        s_next = (b + 1) * delta
        while pos < n_ev and log.ev_t[pos] < s_next:
            apply_event(pos)
            pos += 1


def _classify_vacant(log: FieldEventLog, grid: BlockGrid,
                     out: BlockClassification):
    delta = grid.delta
    n_layers = grid.n_layers
    lo_col, hi_col = grid.col_range
    n_ev = log.ev_t.shape[0]
    positions = log.start_pos.copy()
    pos_ev = 0
    for j in range(n_layers):
        t_ped = max(0, (j - 1) * delta)
        while pos_ev < n_ev and log.ev_t[pos_ev] <= t_ped:
            positions[log.ev_pid[pos_ev]] = log.ev_dst[pos_ev]
            pos_ev += 1
        ped_positions = positions
        # replay a scratch copy forward to the layer start
        scratch = positions.copy()
        k = pos_ev
        t_lo = j * delta
        while k < n_ev and log.ev_t[k] <= t_lo:
            scratch[log.ev_pid[k]] = log.ev_dst[k]
            k += 1
        start_idx = k
        t_hi = (j + 1) * delta
        for i in range(lo_col, hi_col + 1):
            v_lo, v_hi = grid.vee(i)
            tagged = np.nonzero((ped_positions >= v_lo)
                                & (ped_positions < v_hi))[0]
            _vacancy_one_block(log, grid, out, i, j, tagged, scratch,
                               start_idx, t_lo, t_hi)


def _vacancy_one_block(log, grid, out, i, j, tagged, at_start, start_idx,
                       t_lo, t_hi):
    delta = grid.delta
    x_lo = i * delta
    tag_set = set(int(p) for p in tagged)
    cnt = np.zeros(delta, dtype=np.int64)
    for p in tagged:
        x = int(at_start[p])
        if x_lo <= x < x_lo + delta:
            cnt[x - x_lo] += 1
    zero = np.nonzero(cnt == 0)[0]
    if zero.shape[0]:
        out.vacant[(i, j)] = True
        out.vacant_witness[(i, j)] = (x_lo + int(zero[0]), float(t_lo))
        return
    k = start_idx
    n_ev = log.ev_t.shape[0]
    while k < n_ev and log.ev_t[k] < t_hi:
        if int(log.ev_pid[k]) in tag_set:
            src = int(log.ev_src[k]) - x_lo
            dst = int(log.ev_dst[k]) - x_lo
            if 0 <= dst < delta:
                cnt[dst] += 1
            if 0 <= src < delta:
                cnt[src] -= 1
                if cnt[src] == 0:
                    out.vacant[(i, j)] = True
                    out.vacant_witness[(i, j)] = (
                        x_lo + src, float(log.ev_t[k]))
                    return
        k += 1
