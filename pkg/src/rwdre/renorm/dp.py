"""Supremum of distinct bad-block visits over constrained path itineraries.

The optimization runs at block granularity: the walker's column index does
a nearest-neighbour walk, each column-boundary crossing consumes one unit
of the jump budget, and time layers are consumed in order (moving through
time is free).  Within one layer a walk covers a contiguous column
interval [a, b]: entering at e and leaving at f costs exactly
2(b - a) - |f - e| crossings (sweep the short side first), and the blocks
collected are the interval's bad columns, a prefix-sum range count.  The
layer-by-layer DP over (exit column, budget used) is therefore exact.

Real site-level paths cross at most one column boundary per jump, so the
supremum here dominates the bad-block count of every simulated path with
the same jump budget.
"""

from __future__ import annotations

import numpy as np

DEFAULT_STATE_BUDGET = 20_000_000


class StateBudgetError(RuntimeError):
    """Instance exceeds the configured DP work budget."""

    def __init__(self, needed, budget):
        super().__init__(
            f"DP needs about {needed:.3g} units of work, over the state "
            f"budget {budget:.3g}; shrink the grid or raise state_budget")
        self.needed = needed
        self.budget = budget


def _saturation(n_cols: int, n_layers: int) -> int:
    # enough budget to sweep every column in every layer
    return 2 * (n_cols - 1) * n_layers


def phi_sup_array(bad, col_lo: int, ell: int,
                  state_budget: int = DEFAULT_STATE_BUDGET) -> int:
    """Maximum number of distinct bad blocks over itineraries that start
    in the column containing the origin with at most ell crossings.

    bad: (n_cols, n_layers) boolean array; column index k holds block
    column col_lo + k.
    """
    bad = np.asarray(bad)
    if bad.ndim != 2:
        raise ValueError("bad must be 2-d (columns x layers)")
    if ell < 0:
        raise ValueError("jump budget must be >= 0")
    W, J = bad.shape
    if W == 0 or J == 0:
        return 0
    k0 = -int(col_lo)
    if not 0 <= k0 < W:
        raise ValueError("origin column outside the grid")
    total = int(bad.sum())
    if total == 0:
        return 0
    ell_eff = min(int(ell), _saturation(W, J))
    if ell_eff >= _saturation(W, J):
        return total
    work = float(J) * W * W * (ell_eff + 1)
    if work > state_budget:
        raise StateBudgetError(work, state_budget)

    neg = -np.inf
    V = np.full((W, ell_eff + 1), neg)
    V[k0, 0] = 0.0
    for j in range(J):
        g = bad[:, j].astype(np.int64)
        P = np.concatenate(([0], np.cumsum(g)))
        bad_idx = np.nonzero(g)[0]

        def left_exts(m):
            # (cost, gain) of extending coverage to a <= m; Pareto points
            # sit exactly at bad columns
            out = [(0, 0)]
            for a in bad_idx[bad_idx < m][::-1]:
                c = 2 * (m - a)
                if c > ell_eff:
                    break
                out.append((c, int(P[m] - P[a])))
            return out

        def right_exts(M):
            out = [(0, 0)]
            for b in bad_idx[bad_idx > M]:
                c = 2 * (b - M)
                if c > ell_eff:
                    break
                out.append((c, int(P[b + 1] - P[M + 1])))
            return out

        lcache = {}
        rcache = {}
        B = np.full((W, ell_eff + 1), neg)
        for e in range(W):
            ve = V[e]
            if not np.isfinite(ve).any():
                continue
            for f in range(max(0, e - ell_eff), min(W, e + ell_eff + 1)):
                base = abs(f - e)
                m, M = (e, f) if e <= f else (f, e)
                mid = int(P[M + 1] - P[m])
                if m not in lcache:
                    lcache[m] = left_exts(m)
                if M not in rcache:
                    rcache[M] = right_exts(M)
                row = B[f]
                for cl, gl in lcache[m]:
                    c1 = base + cl
                    if c1 > ell_eff:
                        break
                    for cr, gr in rcache[M]:
                        c = c1 + cr
                        if c > ell_eff:
                            break
                        gain = mid + gl + gr
                        if c == 0:
                            np.maximum(row, ve + gain, out=row)
                        else:
                            np.maximum(row[c:], ve[:-c] + gain,
                                       out=row[c:])
        V = B
    best = V.max()
    return int(best) if np.isfinite(best) else 0


def phi_sup_dp(classification, grid, ell: int,
               state_budget: int = DEFAULT_STATE_BUDGET) -> int:
    """Exact supremum of phi over the grid's itinerary class."""
    bad = classification.bad_array()
    return phi_sup_array(bad, grid.col_range[0], ell, state_budget)


def phi_event_query(bad, col_lo: int, q: int, ell: int,
                    state_budget: int = DEFAULT_STATE_BUDGET) -> bool:
    """Decide whether the supremum reaches q without always paying for the
    full DP: a total-count upper bound and a single-column lower bound
    settle the common cases, including every saturated-budget instance.
    """
    if q <= 0:
        return True
    bad = np.asarray(bad)
    if int(bad.sum()) < q:
        return False
    cols = col_lo + np.arange(bad.shape[0])
    colsum = bad.sum(axis=1)
    if bool(np.any((colsum >= q) & (np.abs(cols) <= ell))):
        return True
    return phi_sup_array(bad, col_lo, ell, state_budget) >= q
