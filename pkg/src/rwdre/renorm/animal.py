"""Visited-block sets of walker paths.

The space-time graph of a path is a union of horizontal segments, one per
holding interval, so the set of blocks it meets comes straight from the
segment endpoints.  Visits to consecutive blocks differ by one step in
exactly one coordinate, which makes the visited set a lattice animal
containing the origin block; lattice_animal re-verifies both facts rather
than assuming them.
"""

from __future__ import annotations

from collections import deque

import numpy as np


def path_segments(path, t_end=None):
    """Holding segments (x, s_lo, s_hi) covering [0, t_end), in time order.

    The walker sits at the origin before its first jump.  The closing
    endpoint t_end (default path.t) is excluded: a path observed on [0, t)
    meets only layers below t.
    """
    if path.d != 1:
        raise NotImplementedError("block sets are computed for d=1")
    t_end = float(path.t if t_end is None else t_end)
    ts = np.asarray(path.jump_times, dtype=np.float64)
    xs = np.asarray(path.positions, dtype=np.int64)
    out = []
    cur_x = 0
    cur_t = 0.0
    for k in range(ts.shape[0]):
        if ts[k] >= t_end:
            break
        if ts[k] > cur_t:
            out.append((cur_x, cur_t, float(ts[k])))
        cur_x = int(xs[k])
        cur_t = float(ts[k])
    if t_end > cur_t:
        out.append((cur_x, cur_t, t_end))
    return out


def path_blocks(path, grid):
    """Blocks (i, j) met by the path, in first-visit order, no repeats."""
    delta = grid.delta
    n_layers = grid.n_layers
    seen = set()
    order = []
    for x, s_lo, s_hi in path_segments(path, t_end=min(path.t,
                                                       n_layers * delta)):
        i = int(x) // delta
        j_lo = max(0, int(np.floor(s_lo / delta)))
        j_hi = min(n_layers - 1, int(np.ceil(s_hi / delta)) - 1)
        for j in range(j_lo, j_hi + 1):
            b = (i, j)
            if b not in seen:
                seen.add(b)
                order.append(b)
    return order


def lattice_animal(path, grid):
    """Visited-block set, verified connected and containing (0, 0)."""
    blocks = set(path_blocks(path, grid))
    if (0, 0) not in blocks:
        raise RuntimeError("visited-block set misses the origin block")
    reached = {(0, 0)}
    queue = deque([(0, 0)])
    while queue:
        i, j = queue.popleft()
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            nb = (i + di, j + dj)
            if nb in blocks and nb not in reached:
                reached.add(nb)
                queue.append(nb)
    if reached != blocks:
        raise RuntimeError(
            f"visited-block set is disconnected: {len(blocks) - len(reached)}"
            " blocks unreachable from the origin")
    return blocks


def phi_r(path, classification, grid) -> int:
    """Number of distinct bad blocks met by the path."""
    return sum(1 for (i, j) in path_blocks(path, grid)
               if classification.is_bad(i, j))


def gamma_tilde(path, classification, grid):
    """Bad blocks met by the path."""
    return {b for b in path_blocks(path, grid)
            if classification.is_bad(*b)}


def lambda_set(path, classification, grid):
    """Good blocks met by the path whose pedestal particles leave some
    block point unvisited."""
    return {b for b in path_blocks(path, grid)
            if classification.is_vacant(*b) and not classification.is_bad(*b)}


def time_in_blocks(path, grid, blocks) -> float:
    """Lebesgue time the path spends inside the given block set."""
    delta = grid.delta
    n_layers = grid.n_layers
    blocks = set(blocks)
    total = 0.0
    for x, s_lo, s_hi in path_segments(path):
        i = int(x) // delta
        j_lo = max(0, int(np.floor(s_lo / delta)))
        j_hi = min(n_layers - 1, int(np.ceil(s_hi / delta)) - 1)
        for j in range(j_lo, j_hi + 1):
            if (i, j) in blocks:
                total += min(s_hi, (j + 1) * delta) - max(s_lo, j * delta)
    return total
