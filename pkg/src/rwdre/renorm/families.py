"""Separation-constrained families of block indices.

Union bounds over block events need sub-families whose members are far
enough apart to be nearly independent: along one row the column gaps must
reach 8; in general the pairwise l1 distance must reach 10 with all time
indices sharing a parity.
"""

from __future__ import annotations

SAME_ROW = "same_row_ge8"
GENERAL = "general_ge10_same_parity"
MODES = (SAME_ROW, GENERAL)


def _pairs(pts):
    for a in range(len(pts)):
        for b in range(a + 1, len(pts)):
            yield pts[a], pts[b]


def separated_family(points, mode: str) -> bool:
    """Validate the separation (and parity) constraints on a point set."""
    pts = [(int(i), int(j)) for (i, j) in points]
    if mode == SAME_ROW:
        rows = {j for _, j in pts}
        if len(rows) > 1:
            return False
        return all(abs(p[0] - q[0]) >= 8 for p, q in _pairs(pts))
    if mode == GENERAL:
        parities = {j & 1 for _, j in pts}
        if len(parities) > 1:
            return False
        return all(abs(p[0] - q[0]) + abs(p[1] - q[1]) >= 10
                   for p, q in _pairs(pts))
    raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")


def _majority(pts, key):
    buckets = {}
    for p in pts:
        buckets.setdefault(key(p), []).append(p)
    return max(buckets.values(), key=lambda v: (len(v), -min(v)[0]))


def extract_separated(points, mode: str = GENERAL):
    """Greedy maximal separated sub-family, deterministic for a given set.

    The candidate pool is first restricted to the majority time-parity
    (or majority row in same-row mode), then scanned in sorted order,
    keeping every point far enough from all previous picks.
    """
    pts = sorted({(int(i), int(j)) for (i, j) in points})
    if not pts:
        return []
    if mode == SAME_ROW:
        pool = _majority(pts, key=lambda p: p[1])
        sep = lambda p, q: abs(p[0] - q[0]) >= 8
    elif mode == GENERAL:
        pool = _majority(pts, key=lambda p: p[1] & 1)
        sep = lambda p, q: abs(p[0] - q[0]) + abs(p[1] - q[1]) >= 10
    else:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    picked = []
    for p in sorted(pool):
        if all(sep(p, q) for q in picked):
            picked.append(p)
    return picked
