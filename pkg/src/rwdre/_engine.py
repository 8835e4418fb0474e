"""Exact event engines (numba kernels plus slab drivers).

Three engines share the physics:

* ``advance_field_1d`` / ``advance_field_nd``: the literal aggregated
  single-clock advance of the background field.  One exponential clock at
  rate = particle count; each event moves one uniformly chosen particle one
  step.  Used by the environment API and for small recorded runs.

* ``walker_reference_1d``: full-field merged walker.  Field and walker
  events are two independent exponential streams interleaved by time.
  Serves as the law reference for the windowed engine and as the recording
  engine for replay oracles.

* windowed slab engine (``run_windowed_1d``): the production walker and
  block-analyzer path.  Time is cut into slabs.  Per slab, particles that
  provably cannot reach the active site window (slab jump count smaller
  than their distance; jump counts revealed by the exact Poisson splitting
  K = N+ + N-, net displacement D = N+ - N-) are advanced by their endpoint
  displacement only; the remaining near set runs the aggregated single
  clock restricted to that set, merged with the walker's jumps.  Every
  observable quantity (walker path, site counts at slab boundaries, the
  full field trajectory inside the window) has exactly the law of the full
  process; only interior trajectories of provably non-interacting far
  particles are skipped.  The optional analyzer stage maintains sliding
  window sums and tagged-coverage counters to classify space-time blocks
  exactly during the same sweep.

All randomness in kernels comes from xoshiro256++ states owned by the
caller; slab-level vector draws come from a numpy Generator.  Streams are
kept separate (field, walker, slab) so runs are reproducible and the field
does not depend on walker parameters.
"""

from __future__ import annotations

import numpy as np
from numba import njit, int64, uint64

from ._rng import xs_next, xs_double, xs_exponential, xs_below

U64 = np.uint64

# status codes shared by kernels and drivers
OK = 0
BREACH = 1
HISTORY_MISS = 2
BUDGET = 3
CAPACITY = 4

# istate slots (walker kernels)
I_GLIN = 0       # walker site, linear torus index
I_GUNWRAP = 1    # walker coordinate in Z (d=1)
I_NJUMP = 2
I_EVENTS = 3
I_STATUS = 4

# fstate slots
F_TNOW = 0
F_OCC = 1        # occupied-time accumulator
F_OCCC = 2       # Kahan compensation


# ---------------------------------------------------------------------------
# aggregated full-field advance (spec-literal)
# ---------------------------------------------------------------------------

@njit(cache=True)
def advance_field_1d(positions, site_count, rng, t_now, t_target, max_events):
    """Aggregated single-clock advance on the 1-d torus.

    Each event: dt ~ Exp(n), then one uniform draw in [0, 2n) picking the
    particle (v >> 1) and the direction (v & 1).  Returns (t, events, status).
    """
    n = positions.shape[0]
    size = site_count.shape[0]
    if n == 0:
        return t_target, 0, OK
    rate = float(n)
    events = 0
    while True:
        dt = xs_exponential(rng) / rate
        if t_now + dt > t_target:
            return t_target, events, OK
        if events >= max_events:
            return t_now, events, BUDGET
        t_now += dt
        v = xs_below(rng, 2 * n)
        idx = int64(v >> U64(1))
        p = positions[idx]
        site_count[p] -= 1
        if v & U64(1):
            p2 = p + 1
            if p2 == size:
                p2 = 0
        else:
            p2 = p - 1
            if p2 < 0:
                p2 = size - 1
        positions[idx] = p2
        site_count[p2] += 1
        events += 1


@njit(cache=True)
def advance_field_1d_record(positions, site_count, rng, t_now, t_target,
                            max_events, ev_t, ev_pid, ev_src, ev_dst):
    """Same event stream as advance_field_1d, recording every event.

    Recording arrays are preallocated; overflow returns CAPACITY with the
    events applied so far (the field state stays valid).
    """
    n = positions.shape[0]
    size = site_count.shape[0]
    if n == 0:
        return t_target, 0, OK
    rate = float(n)
    cap = ev_t.shape[0]
    events = 0
    while True:
        dt = xs_exponential(rng) / rate
        if t_now + dt > t_target:
            return t_target, events, OK
        if events >= max_events:
            return t_now, events, BUDGET
        if events >= cap:
            return t_now, events, CAPACITY
        t_now += dt
        v = xs_below(rng, 2 * n)
        idx = int64(v >> U64(1))
        p = positions[idx]
        site_count[p] -= 1
        if v & U64(1):
            p2 = p + 1
            if p2 == size:
                p2 = 0
        else:
            p2 = p - 1
            if p2 < 0:
                p2 = size - 1
        positions[idx] = p2
        site_count[p2] += 1
        ev_t[events] = t_now
        ev_pid[events] = idx
        ev_src[events] = p
        ev_dst[events] = p2
        events += 1


@njit(cache=True)
def advance_field_nd(positions, site_count, rng, t_now, t_target, max_events,
                     dims, strides):
    """Aggregated advance on a d-dimensional torus with linearized sites.

    One uniform draw in [0, 2*d*n) picks particle, axis and sign.  Kept
    simple (coordinate decode per event); d >= 2 runs are desk-scale only.
    """
    n = positions.shape[0]
    d = dims.shape[0]
    if n == 0:
        return t_target, 0, OK
    rate = float(n)
    events = 0
    while True:
        dt = xs_exponential(rng) / rate
        if t_now + dt > t_target:
            return t_target, events, OK
        if events >= max_events:
            return t_now, events, BUDGET
        t_now += dt
        v = xs_below(rng, 2 * d * n)
        idx = int64(v) // (2 * d)
        rem = int64(v) % (2 * d)
        axis = rem >> 1
        p = positions[idx]
        coord = (p // strides[axis]) % dims[axis]
        site_count[p] -= 1
        if rem & 1:
            c2 = coord + 1
            if c2 == dims[axis]:
                c2 = 0
        else:
            c2 = coord - 1
            if c2 < 0:
                c2 = dims[axis] - 1
        p2 = p + (c2 - coord) * strides[axis]
        positions[idx] = p2
        site_count[p2] += 1
        events += 1


# ---------------------------------------------------------------------------
# alias sampling helper
# ---------------------------------------------------------------------------

@njit(cache=True, inline="always")
def _alias_draw(rng, accept, alias):
    k = accept.shape[0]
    slot = int64(xs_below(rng, k))
    if xs_double(rng) < accept[slot]:
        return slot
    return alias[slot]


# ---------------------------------------------------------------------------
# frozen-environment walker (field sampled once, never moves)
# ---------------------------------------------------------------------------

@njit(cache=True)
def walker_frozen_1d(site_count, rng_g, istate, fstate, t_end, half_box,
                     occ_accept, occ_alias, occ_off, vac_accept, vac_alias,
                     vac_off, decide_dest, jump_t, jump_x, jump_saw, max_events):
    """Walker alone against a static count field, d=1."""
    size = site_count.shape[0]
    g = istate[I_GLIN]
    gu = istate[I_GUNWRAP]
    nj = istate[I_NJUMP]
    events = istate[I_EVENTS]
    t_now = fstate[F_TNOW]
    occ = fstate[F_OCC]
    occ_c = fstate[F_OCCC]
    cap = jump_t.shape[0]
    status = OK
    while True:
        dt = xs_exponential(rng_g)
        step = dt if t_now + dt <= t_end else t_end - t_now
        flag = 1.0 if site_count[g] > 0 else 0.0
        y = step * flag - occ_c
        tt = occ + y
        occ_c = (tt - occ) - y
        occ = tt
        if t_now + dt > t_end:
            t_now = t_end
            break
        t_now += dt
        if events >= max_events:
            status = BUDGET
            break
        if nj >= cap:
            status = CAPACITY
            break
        events += 1
        saw = site_count[g] > 0
        if decide_dest:
            disp = occ_off[_alias_draw(rng_g, occ_accept, occ_alias)]
            p2 = g + disp
            p2 = p2 % size
            if site_count[p2] == 0:
                disp = vac_off[_alias_draw(rng_g, vac_accept, vac_alias)]
        elif saw:
            disp = occ_off[_alias_draw(rng_g, occ_accept, occ_alias)]
        else:
            disp = vac_off[_alias_draw(rng_g, vac_accept, vac_alias)]
        gu += disp
        g = (g + disp) % size
        jump_t[nj] = t_now
        jump_x[nj] = gu
        jump_saw[nj] = 1 if saw else 0
        nj += 1
        if gu > half_box or gu < -half_box:
            status = BREACH
            break
    istate[I_GLIN] = g
    istate[I_GUNWRAP] = gu
    istate[I_NJUMP] = nj
    istate[I_EVENTS] = events
    istate[I_STATUS] = status
    fstate[F_TNOW] = t_now
    fstate[F_OCC] = occ
    fstate[F_OCCC] = occ_c
    return status


# ---------------------------------------------------------------------------
# reference merged walker, full field, d=1
# ---------------------------------------------------------------------------

@njit(cache=True)
def walker_reference_1d(positions, site_count, rng_f, rng_g, istate, fstate,
                        t_end, half_box, occ_accept, occ_alias, occ_off,
                        vac_accept, vac_alias, vac_off, decide_dest,
                        jump_t, jump_x, jump_saw, max_events,
                        record, ev_t, ev_pid, ev_src, ev_dst):
    """Merged exact event stream: field stream (rate n) + walker stream
    (rate 1), interleaved by time, each on its own generator.

    With record=True every field event is logged for replay oracles.
    """
    n = positions.shape[0]
    size = site_count.shape[0]
    g = istate[I_GLIN]
    gu = istate[I_GUNWRAP]
    nj = istate[I_NJUMP]
    events = istate[I_EVENTS]
    t_now = fstate[F_TNOW]
    occ = fstate[F_OCC]
    occ_c = fstate[F_OCCC]
    cap = jump_t.shape[0]
    rcap = ev_t.shape[0]
    nrec = 0
    status = OK
    rate = float(n)
    t_field = t_end + 1.0
    if n > 0:
        t_field = t_now + xs_exponential(rng_f) / rate
    t_green = t_now + xs_exponential(rng_g)
    while True:
        t_next = t_field if t_field <= t_green else t_green
        is_field = t_field <= t_green
        step_end = t_next if t_next <= t_end else t_end
        flag = 1.0 if site_count[g] > 0 else 0.0
        y = (step_end - t_now) * flag - occ_c
        tt = occ + y
        occ_c = (tt - occ) - y
        occ = tt
        if t_next > t_end:
            t_now = t_end
            break
        t_now = t_next
        if events >= max_events:
            status = BUDGET
            break
        events += 1
        if is_field:
            v = xs_below(rng_f, 2 * n)
            idx = int64(v >> U64(1))
            p = positions[idx]
            site_count[p] -= 1
            if v & U64(1):
                p2 = p + 1
                if p2 == size:
                    p2 = 0
            else:
                p2 = p - 1
                if p2 < 0:
                    p2 = size - 1
            positions[idx] = p2
            site_count[p2] += 1
            if record:
                if nrec >= rcap:
                    status = CAPACITY
                    break
                ev_t[nrec] = t_now
                ev_pid[nrec] = idx
                ev_src[nrec] = p
                ev_dst[nrec] = p2
                nrec += 1
            t_field = t_now + xs_exponential(rng_f) / rate
        else:
            if nj >= cap:
                status = CAPACITY
                break
            saw = site_count[g] > 0
            if decide_dest:
                disp = occ_off[_alias_draw(rng_g, occ_accept, occ_alias)]
                p2 = (g + disp) % size
                if site_count[p2] == 0:
                    disp = vac_off[_alias_draw(rng_g, vac_accept, vac_alias)]
            elif saw:
                disp = occ_off[_alias_draw(rng_g, occ_accept, occ_alias)]
            else:
                disp = vac_off[_alias_draw(rng_g, vac_accept, vac_alias)]
            gu += disp
            g = (g + disp) % size
            jump_t[nj] = t_now
            jump_x[nj] = gu
            jump_saw[nj] = 1 if saw else 0
            nj += 1
            if gu > half_box or gu < -half_box:
                status = BREACH
                break
            t_green = t_now + xs_exponential(rng_g)
    istate[I_GLIN] = g
    istate[I_GUNWRAP] = gu
    istate[I_NJUMP] = nj
    istate[I_EVENTS] = events
    istate[I_STATUS] = status
    fstate[F_TNOW] = t_now
    fstate[F_OCC] = occ
    fstate[F_OCCC] = occ_c
    return nrec


@njit(cache=True)
def walker_frozen_nd(site_count, rng_g, istate_pos, istate, fstate, t_end,
                     half_box, occ_accept, occ_alias, occ_off, vac_accept,
                     vac_alias, vac_off, decide_dest, jump_t, jump_x,
                     jump_saw, max_events, dims, strides):
    """Walker alone against a static count field, general d.

    istate_pos holds (linear index, unwrapped coordinates...); jump_x is
    (cap, d) unwrapped coordinates after each jump.
    """
    d = dims.shape[0]
    g = istate_pos[0]
    nj = istate[I_NJUMP]
    events = istate[I_EVENTS]
    t_now = fstate[F_TNOW]
    occ = fstate[F_OCC]
    occ_c = fstate[F_OCCC]
    cap = jump_t.shape[0]
    status = OK
    while True:
        dt = xs_exponential(rng_g)
        step = dt if t_now + dt <= t_end else t_end - t_now
        if site_count[g] > 0:
            y = step - occ_c
            tt = occ + y
            occ_c = (tt - occ) - y
            occ = tt
        if t_now + dt > t_end:
            t_now = t_end
            break
        t_now += dt
        if events >= max_events:
            status = BUDGET
            break
        if nj >= cap:
            status = CAPACITY
            break
        events += 1
        saw = site_count[g] > 0
        if decide_dest:
            row = _alias_draw(rng_g, occ_accept, occ_alias)
            g2 = g
            for a in range(d):
                c = (g2 // strides[a]) % dims[a]
                c2 = (c + occ_off[row, a]) % dims[a]
                g2 += (c2 - c) * strides[a]
            if site_count[g2] == 0:
                row = _alias_draw(rng_g, vac_accept, vac_alias)
                off = vac_off
            else:
                off = occ_off
        elif saw:
            row = _alias_draw(rng_g, occ_accept, occ_alias)
            off = occ_off
        else:
            row = _alias_draw(rng_g, vac_accept, vac_alias)
            off = vac_off
        breach = False
        for a in range(d):
            c = (g // strides[a]) % dims[a]
            c2 = (c + off[row, a]) % dims[a]
            g += (c2 - c) * strides[a]
            istate_pos[1 + a] += off[row, a]
            if istate_pos[1 + a] > half_box or istate_pos[1 + a] < -half_box:
                breach = True
        jump_t[nj] = t_now
        for a in range(d):
            jump_x[nj, a] = istate_pos[1 + a]
        jump_saw[nj] = 1 if saw else 0
        nj += 1
        if breach:
            status = BREACH
            break
    istate_pos[0] = g
    istate[I_NJUMP] = nj
    istate[I_EVENTS] = events
    istate[I_STATUS] = status
    fstate[F_TNOW] = t_now
    fstate[F_OCC] = occ
    fstate[F_OCCC] = occ_c
    return status


@njit(cache=True)
def walker_reference_nd(positions, site_count, rng_f, rng_g, istate_pos,
                        istate, fstate, t_end, half_box, occ_accept,
                        occ_alias, occ_off, vac_accept, vac_alias, vac_off,
                        decide_dest, jump_t, jump_x, jump_saw, max_events,
                        dims, strides):
    """Merged exact event stream in general dimension (field + walker)."""
    n = positions.shape[0]
    d = dims.shape[0]
    g = istate_pos[0]
    nj = istate[I_NJUMP]
    events = istate[I_EVENTS]
    t_now = fstate[F_TNOW]
    occ = fstate[F_OCC]
    occ_c = fstate[F_OCCC]
    cap = jump_t.shape[0]
    status = OK
    rate = float(n)
    t_field = t_end + 1.0
    if n > 0:
        t_field = t_now + xs_exponential(rng_f) / rate
    t_green = t_now + xs_exponential(rng_g)
    while True:
        t_next = t_field if t_field <= t_green else t_green
        is_field = t_field <= t_green
        step_end = t_next if t_next <= t_end else t_end
        if step_end > t_now and site_count[g] > 0:
            y = (step_end - t_now) - occ_c
            tt = occ + y
            occ_c = (tt - occ) - y
            occ = tt
        if t_next > t_end:
            t_now = t_end
            break
        t_now = t_next
        if events >= max_events:
            status = BUDGET
            break
        events += 1
        if is_field:
            v = xs_below(rng_f, 2 * d * n)
            idx = int64(v) // (2 * d)
            rem = int64(v) % (2 * d)
            axis = rem >> 1
            p = positions[idx]
            coord = (p // strides[axis]) % dims[axis]
            site_count[p] -= 1
            if rem & 1:
                c2 = coord + 1
                if c2 == dims[axis]:
                    c2 = 0
            else:
                c2 = coord - 1
                if c2 < 0:
                    c2 = dims[axis] - 1
            p2 = p + (c2 - coord) * strides[axis]
            positions[idx] = p2
            site_count[p2] += 1
            t_field = t_now + xs_exponential(rng_f) / rate
        else:
            if nj >= cap:
                status = CAPACITY
                break
            saw = site_count[g] > 0
            if decide_dest:
                row = _alias_draw(rng_g, occ_accept, occ_alias)
                g2 = g
                for a in range(d):
                    c = (g2 // strides[a]) % dims[a]
                    c2 = (c + occ_off[row, a]) % dims[a]
                    g2 += (c2 - c) * strides[a]
                if site_count[g2] == 0:
                    row = _alias_draw(rng_g, vac_accept, vac_alias)
                    off = vac_off
                else:
                    off = occ_off
            elif saw:
                row = _alias_draw(rng_g, occ_accept, occ_alias)
                off = occ_off
            else:
                row = _alias_draw(rng_g, vac_accept, vac_alias)
                off = vac_off
            breach = False
            for a in range(d):
                c = (g // strides[a]) % dims[a]
                c2 = (c + off[row, a]) % dims[a]
                g += (c2 - c) * strides[a]
                istate_pos[1 + a] += off[row, a]
                if istate_pos[1 + a] > half_box or \
                        istate_pos[1 + a] < -half_box:
                    breach = True
            jump_t[nj] = t_now
            for a in range(d):
                jump_x[nj, a] = istate_pos[1 + a]
            jump_saw[nj] = 1 if saw else 0
            nj += 1
            if breach:
                status = BREACH
                break
            t_green = t_now + xs_exponential(rng_g)
    istate_pos[0] = g
    istate[I_NJUMP] = nj
    istate[I_EVENTS] = events
    istate[I_STATUS] = status
    fstate[F_TNOW] = t_now
    fstate[F_OCC] = occ
    fstate[F_OCCC] = occ_c
    return status


# ---------------------------------------------------------------------------
# windowed slab kernel: near-set Gillespie + walker + optional analyzer
# ---------------------------------------------------------------------------

@njit(cache=True)
def _mark_bad(x, t_now, delta, c0r, j_lo, j_hi, col_lo, col_hi, colbase,
              n_layers, bad, bad_wx, bad_wt, torus_half):
    """Mark every block whose enlarged window contains the sliding window
    at x (lattice coordinates) at time t_now as bad, with first witness."""
    xc = x - torus_half
    i_hi = (xc + colbase * delta) // delta - colbase + 3
    i_lo = (xc + c0r + delta - 1 + colbase * delta) // delta - colbase - 4
    if i_lo < col_lo:
        i_lo = col_lo
    if i_hi > col_hi:
        i_hi = col_hi
    for i in range(i_lo, i_hi + 1):
        ci = i - col_lo
        for j in range(j_lo, j_hi + 1):
            if 0 <= j < n_layers:
                k = ci * n_layers + j
                if bad[k] == 0:
                    bad[k] = 1
                    bad_wx[k] = xc
                    bad_wt[k] = t_now


@njit(cache=True)
def _mark_vacant(x, t_now, delta, j, col_lo, col_hi, colbase, n_layers,
                 vacant, vac_wx, vac_wt, torus_half):
    xc = x - torus_half
    i = (xc + colbase * delta) // delta - colbase
    if col_lo <= i <= col_hi and 0 <= j < n_layers:
        k = (i - col_lo) * n_layers + j
        if vacant[k] == 0:
            vacant[k] = 1
            vac_wx[k] = xc
            vac_wt[k] = t_now


@njit(cache=True)
def slab_events_1d(active, positions, site_count, rng_f, rng_g, istate, fstate,
                   t0, t1, t_occ_end, green_times, green_on, half_box,
                   occ_accept, occ_alias, occ_off, vac_accept, vac_alias,
                   vac_off, decide_dest, jump_t, jump_x, jump_saw, max_events,
                   promo_t, promo_pid, promo_dir,
                   analyzer_on, wsum, thr, wsum_lo, wsum_hi, delta, c0r,
                   colbase, n_layers, col_lo, col_hi, bad, bad_wx, bad_wt,
                   vacant, vac_wx, vac_wt, cnt, tagcol, live_from, torus_half):
    """Advance one slab [t0, t1): aggregated clock over the active set,
    merged with the walker's pre-drawn jump times and with the (rare)
    promoted-particle event list.  Analyzer updates ride on each event.

    Occupied time accrues only up to t_occ_end (the walker horizon; the
    analyzer sweep may run past it to finish the last layer).
    """
    m = active.shape[0]
    size = site_count.shape[0]
    g = istate[I_GLIN]
    gu = istate[I_GUNWRAP]
    nj = istate[I_NJUMP]
    events = istate[I_EVENTS]
    t_now = fstate[F_TNOW]
    occ = fstate[F_OCC]
    occ_c = fstate[F_OCCC]
    cap = jump_t.shape[0]
    status = OK
    rate = float(m)
    gi = 0
    ng = green_times.shape[0]
    npr = promo_t.shape[0]
    pi = 0
    win_lo = wsum_lo
    win_hi = wsum_hi + c0r - 1
    t_field = t1 + 1.0
    if m > 0:
        t_field = t_now + xs_exponential(rng_f) / rate
    while True:
        t_green = green_times[gi] if (green_on and gi < ng) else t1 + 1.0
        t_promo = promo_t[pi] if pi < npr else t1 + 1.0
        # next event among the three streams
        kind = 0  # 0 field, 1 green, 2 promoted
        t_next = t_field
        if t_green < t_next:
            t_next = t_green
            kind = 1
        if t_promo < t_next:
            t_next = t_promo
            kind = 2
        step_end = t_next if t_next <= t1 else t1
        seg_hi = step_end if step_end < t_occ_end else t_occ_end
        seg_lo = t_now if t_now < t_occ_end else t_occ_end
        if seg_hi > seg_lo and site_count[g] > 0:
            y = (seg_hi - seg_lo) - occ_c
            tt = occ + y
            occ_c = (tt - occ) - y
            occ = tt
        if t_next > t1:
            t_now = t1
            break
        t_now = t_next
        if events >= max_events:
            status = BUDGET
            break
        events += 1
        if kind == 1:
            # walker jump
            if nj >= cap:
                status = CAPACITY
                break
            saw = site_count[g] > 0
            if decide_dest:
                disp = occ_off[_alias_draw(rng_g, occ_accept, occ_alias)]
                p2 = (g + disp) % size
                if site_count[p2] == 0:
                    disp = vac_off[_alias_draw(rng_g, vac_accept, vac_alias)]
            elif saw:
                disp = occ_off[_alias_draw(rng_g, occ_accept, occ_alias)]
            else:
                disp = vac_off[_alias_draw(rng_g, vac_accept, vac_alias)]
            gu += disp
            g = (g + disp) % size
            jump_t[nj] = t_now
            jump_x[nj] = gu
            jump_saw[nj] = 1 if saw else 0
            nj += 1
            gi += 1
            if gu > half_box or gu < -half_box:
                status = BREACH
                break
            if analyzer_on:
                # the walker may only enter columns whose neighbourhood
                # has been tracked since the previous layer started
                jb = int64(t_now / delta)
                needed = (jb - 1) * delta if jb >= 1 else 0.0
                c = (g - torus_half + colbase * delta) // delta - colbase \
                    - col_lo
                for dc in range(-3, 4):
                    ci = c + dc
                    if 0 <= ci < live_from.shape[0]:
                        if live_from[ci] > needed:
                            status = HISTORY_MISS
                            break
                if status != OK:
                    break
            continue
        if kind == 0:
            v = xs_below(rng_f, 2 * m)
            idx = active[int64(v >> U64(1))]
            p = positions[idx]
            if v & U64(1):
                p2 = p + 1
                if p2 == size:
                    p2 = 0
            else:
                p2 = p - 1
                if p2 < 0:
                    p2 = size - 1
            t_field = t_now + xs_exponential(rng_f) / rate
        else:
            idx = promo_pid[pi]
            p = positions[idx]
            if promo_dir[pi] > 0:
                p2 = p + 1
                if p2 == size:
                    p2 = 0
            else:
                p2 = p - 1
                if p2 < 0:
                    p2 = size - 1
            pi += 1
        site_count[p] -= 1
        site_count[p2] += 1
        positions[idx] = p2
        if analyzer_on:
            jb = int64(t_now / delta)
            # sliding sums containing p lose one, those containing p2 gain
            x_lo = p - c0r + 1
            for x in range(x_lo if x_lo > wsum_lo else wsum_lo,
                           (p if p < wsum_hi else wsum_hi) + 1):
                wsum[x] -= 1
                if wsum[x] < thr:
                    _mark_bad(x, t_now, delta, c0r, jb, jb + 1, col_lo,
                              col_hi, colbase, n_layers, bad, bad_wx, bad_wt,
                              torus_half)
            x_lo = p2 - c0r + 1
            for x in range(x_lo if x_lo > wsum_lo else wsum_lo,
                           (p2 if p2 < wsum_hi else wsum_hi) + 1):
                wsum[x] += 1
            # tagged-coverage counters (meaningful inside the window only)
            pc = (p - torus_half + colbase * delta) // delta - colbase
            if tagcol[idx] - pc <= 3 and pc - tagcol[idx] <= 3:
                cnt[p] -= 1
                if cnt[p] == 0 and win_lo <= p <= win_hi:
                    _mark_vacant(p, t_now, delta, jb, col_lo, col_hi,
                                 colbase, n_layers, vacant, vac_wx, vac_wt,
                                 torus_half)
            pc2 = (p2 - torus_half + colbase * delta) // delta - colbase
            if tagcol[idx] - pc2 <= 3 and pc2 - tagcol[idx] <= 3:
                cnt[p2] += 1
    istate[I_GLIN] = g
    istate[I_GUNWRAP] = gu
    istate[I_NJUMP] = nj
    istate[I_EVENTS] = events
    istate[I_STATUS] = status
    fstate[F_TNOW] = t_now
    fstate[F_OCC] = occ
    fstate[F_OCCC] = occ_c
    return gi


# ---------------------------------------------------------------------------
# slab driver
# ---------------------------------------------------------------------------

_EMPTY_F = np.empty(0, dtype=np.float64)
_EMPTY_I = np.empty(0, dtype=np.int64)
_EMPTY_I8 = np.empty(0, dtype=np.int8)


class AnalyzerSetup:
    """Block-analyzer parameters for the windowed sweep.

    delta: block side, c0r: sliding window length, thr: density threshold
    (window sums strictly below it are flagged), n_layers: number of time
    layers swept, phi_col_lo/hi: column range that must stay covered from
    time zero (for path-sum statistics over a fixed grid).
    """

    def __init__(self, delta, c0r, thr, n_layers, phi_col_lo, phi_col_hi):
        if delta <= 0 or c0r <= 0 or n_layers <= 0:
            raise ValueError("analyzer dimensions must be positive")
        if c0r > delta:
            raise ValueError("sliding window cannot exceed the block side")
        if phi_col_lo > phi_col_hi:
            raise ValueError("empty column grid")
        self.delta = int(delta)
        self.c0r = int(c0r)
        self.thr = float(thr)
        self.n_layers = int(n_layers)
        self.phi_col_lo = int(phi_col_lo)
        self.phi_col_hi = int(phi_col_hi)


class AnalyzerState:
    """Raw sweep output: per-block marks, witnesses and coverage metadata.

    Arrays are indexed [column - col_min, layer].  ``live_from[c]`` is the
    time from which the column's full neighbourhood has been tracked; a
    block label is trustworthy only where ``valid`` is True.
    """

    def __init__(self, setup, col_min, n_cols):
        J = setup.n_layers
        self.setup = setup
        self.col_min = col_min
        self.n_cols = n_cols
        self.bad = np.zeros(n_cols * J, dtype=np.uint8)
        self.bad_wx = np.zeros(n_cols * J, dtype=np.int64)
        self.bad_wt = np.zeros(n_cols * J, dtype=np.float64)
        self.vacant = np.zeros(n_cols * J, dtype=np.uint8)
        self.vac_wx = np.zeros(n_cols * J, dtype=np.int64)
        self.vac_wt = np.zeros(n_cols * J, dtype=np.float64)
        self.live_from = np.full(n_cols, np.inf)

    def finish(self):
        J = self.setup.n_layers
        self.bad = self.bad.reshape(self.n_cols, J).astype(bool)
        self.bad_wx = self.bad_wx.reshape(self.n_cols, J)
        self.bad_wt = self.bad_wt.reshape(self.n_cols, J)
        self.vacant = self.vacant.reshape(self.n_cols, J).astype(bool)
        self.vac_wx = self.vac_wx.reshape(self.n_cols, J)
        self.vac_wt = self.vac_wt.reshape(self.n_cols, J)
        # a block is valid when its whole site neighbourhood (three columns
        # either side) was tracked from the start of the previous layer
        need = np.maximum(0.0, (np.arange(J) - 1) * float(self.setup.delta))
        cover = self.live_from.copy()
        for off in range(-3, 4):
            shifted = np.full(self.n_cols, np.inf)
            lo = max(0, -off)
            hi = min(self.n_cols, self.n_cols - off)
            shifted[lo:hi] = self.live_from[lo + off:hi + off]
            cover = np.maximum(cover, shifted)
        self.valid = cover[:, None] <= need[None, :]


class WindowedOutcome:
    def __init__(self, status, t_reached, jump_t, jump_x, jump_saw,
                 occupied_time, events, n_slabs, promotions, analyzer):
        self.status = status
        self.t_reached = t_reached
        self.jump_t = jump_t
        self.jump_x = jump_x
        self.jump_saw = jump_saw
        self.occupied_time = occupied_time
        self.events = events
        self.n_slabs = n_slabs
        self.promotions = promotions
        self.analyzer = analyzer


def _interval_dist(pos, w_lo, w_hi, size):
    """Distance from each site index to the (non-wrapped) index interval
    [w_lo, w_hi] along the torus."""
    inside = (pos >= w_lo) & (pos <= w_hi)
    a = (pos - w_hi) % size
    b = (w_lo - pos) % size
    d = np.minimum(a, b)
    d[inside] = 0
    return d


def _col_of(x_lattice, delta, colbase):
    return (x_lattice + colbase * delta) // delta - colbase


def run_windowed_1d(positions, site_count, rng_slab, rng_green, xs_f, xs_g,
                    t_green_end, t_sweep_end, half_box, occ_accept, occ_alias,
                    occ_off, vac_accept, vac_alias, vac_off, decide_dest,
                    max_range, max_events, slab_h, setup=None):
    """Windowed slab sweep.  Mutates positions/site_count in place; the
    walker starts at the origin at time zero.  Returns a WindowedOutcome.

    With ``setup`` the sweep doubles as the block analyzer: the site window
    is grown (never shrunk) to keep a fixed column grid plus a sleeve
    around the walker tracked, and marks are collected both at event times
    and at layer boundaries, so the flagged set is exactly the set of
    blocks whose enlarged window contains a sub-threshold sliding sum or a
    tagged-coverage gap.
    """
    size = site_count.shape[0]
    L = (size - 1) // 2
    n = positions.shape[0]
    analyzer_on = setup is not None

    if analyzer_on:
        delta = setup.delta
        c0r = setup.c0r
        thr = setup.thr
        J = setup.n_layers
        slab_h = float(delta)
    else:
        delta = 1
        c0r = 1
        thr = -1.0
        J = 1
    colbase = L // delta + 2
    col_min = _col_of(-L, delta, colbase)
    col_max = _col_of(L, delta, colbase)
    n_cols = col_max - col_min + 1

    istate = np.zeros(8, dtype=np.int64)
    istate[I_GLIN] = L  # lattice origin
    fstate = np.zeros(4, dtype=np.float64)
    cap = 256
    jump_t = np.empty(cap, dtype=np.float64)
    jump_x = np.empty(cap, dtype=np.int64)
    jump_saw = np.empty(cap, dtype=np.int8)

    if analyzer_on:
        state = AnalyzerState(setup, col_min, n_cols)
        wsum = np.zeros(size, dtype=np.int64)
        cnt = np.zeros(size, dtype=np.int64)
        tag_prev = _col_of(positions - L, delta, colbase).astype(np.int64)
        tag_cur = tag_prev.copy()
        # predicted two-layer reach of the walker, with generous slack
        look = 2.0 * delta
        reach2 = int(np.ceil((look + 12.0 * np.sqrt(look)) * max_range)) + 16
        w_lo = min((setup.phi_col_lo - 3) * delta - c0r,
                   -(reach2 + 4 * delta))
        w_hi = max((setup.phi_col_hi + 4) * delta + c0r,
                   reach2 + 4 * delta)
    else:
        state = None
        wsum = np.zeros(1, dtype=np.int64)
        cnt = np.zeros(1, dtype=np.int64)
        tag_prev = _EMPTY_I
        reach2 = 0
        w_lo = 0
        w_hi = 0

    margin = int(np.ceil(slab_h + 12.0 * np.sqrt(slab_h))) + 16

    def clip_window(lo, hi):
        if hi - lo + 1 >= size or lo < -L or hi > L:
            return -L, L
        return lo, hi

    def recompute_wsum(lo, hi):
        # sliding sums over [x, x + c0r) for x in [lo, hi - c0r + 1]
        if hi - lo + 1 < c0r:
            return
        seg = site_count[lo + L:hi + L + 1]
        cs = np.concatenate(([0], np.cumsum(seg)))
        wsum[lo + L:hi - c0r + 1 + L + 1] = cs[c0r:] - cs[:-c0r]

    def scan_bad(b, tau):
        # layer-boundary completeness tick for sliding sums
        xs = np.nonzero(wsum[w_lo + L:w_hi + L - c0r + 2] < thr)[0] + w_lo + L
        for x in xs:
            _mark_bad(x, tau, delta, c0r, b, b + 1, col_min, col_max,
                      colbase, J, state.bad, state.bad_wx, state.bad_wt, L)

    def mark_live(lat_lo, lat_hi, tau):
        # only columns whose sites lie fully inside [lat_lo, lat_hi]
        c_lo = _col_of(lat_lo + delta - 1, delta, colbase) - col_min
        c_hi = _col_of(lat_hi + 1, delta, colbase) - 1 - col_min
        if c_hi >= c_lo:
            sl = state.live_from[c_lo:c_hi + 1]
            np.minimum(sl, tau, out=sl)

    if analyzer_on:
        w_lo, w_hi = clip_window(w_lo, w_hi)
        recompute_wsum(w_lo, w_hi)
        mark_live(w_lo, w_hi, 0.0)
        scan_bad(0, 0.0)

    t_now = 0.0
    total_events = 0
    n_slabs = 0
    promotions = 0
    status = OK
    nj_base = 0

    while t_now < t_sweep_end - 1e-12:
        t1 = min(t_now + slab_h, t_sweep_end)
        tau = t_now
        b = int(round(tau / slab_h)) if analyzer_on else 0

        # walker jump times for this slab (its clock runs to t_green_end)
        g_hi = min(t1, t_green_end)
        if tau < t_green_end:
            m_g = int(rng_green.poisson(g_hi - tau))
            green_times = tau + (g_hi - tau) * np.sort(rng_green.random(m_g))
        else:
            m_g = 0
            green_times = _EMPTY_F
        green_on = tau < t_green_end

        if analyzer_on:
            # boundary completeness tick before any state changes
            if tau > 0.0:
                scan_bad(b, tau)
            # grow the window around the walker's predicted reach
            g_lat = istate[I_GLIN] - L
            r_g = m_g * max_range
            need_lo = g_lat - r_g - reach2 - 4 * delta
            need_hi = g_lat + r_g + reach2 + 4 * delta
            if need_lo < w_lo or need_hi > w_hi:
                new_lo, new_hi = clip_window(min(w_lo, need_lo),
                                             max(w_hi, need_hi))
                if new_lo < w_lo:
                    recompute_wsum(new_lo, w_lo + c0r - 2)
                if new_hi > w_hi:
                    recompute_wsum(w_hi - c0r + 2, new_hi)
                w_lo, w_hi = new_lo, new_hi
                mark_live(w_lo, w_hi, tau)
            # the walker's own neighbourhood must have history (it can sit
            # in a column across a boundary without jumping)
            c = _col_of(g_lat, delta, colbase) - col_min
            needed = max(0.0, (b - 1) * delta)
            if np.max(state.live_from[max(0, c - 3):c + 4]) > needed:
                status = HISTORY_MISS
                break
            win_lo_lin = w_lo + L
            win_hi_lin = w_hi + L
            wsum_lo = win_lo_lin
            wsum_hi = win_hi_lin - c0r + 1
        else:
            g_lat = istate[I_GLIN] - L
            r_g = m_g * max_range
            w_lo, w_hi = clip_window(g_lat - r_g - 8, g_lat + r_g + 8)
            win_lo_lin = w_lo + L
            win_hi_lin = w_hi + L
            wsum_lo = 0
            wsum_hi = -1

        # near/far split for this slab
        if n > 0:
            full = (w_hi - w_lo + 1) >= size
            if full:
                near_mask = np.ones(n, dtype=bool)
            else:
                dist = _interval_dist(positions, win_lo_lin, win_hi_lin, size)
                near_mask = dist <= margin
            active = np.nonzero(near_mask)[0].astype(np.int64)
            far = np.nonzero(~near_mask)[0].astype(np.int64)
        else:
            active = _EMPTY_I
            far = _EMPTY_I

        promo_t = _EMPTY_F
        promo_pid = _EMPTY_I
        promo_dir = _EMPTY_I8
        disp_far = None
        if far.shape[0] > 0:
            h = t1 - tau
            np_plus = rng_slab.poisson(h / 2.0, far.shape[0])
            np_minus = rng_slab.poisson(h / 2.0, far.shape[0])
            k_tot = np_plus + np_minus
            exceed = k_tot >= dist[far]
            if np.any(exceed):
                # a far particle could have reached the window: promote it
                # and replay its slab trajectory exactly, conditioned on
                # the revealed jump counts
                idxs = np.nonzero(exceed)[0]
                promotions += idxs.shape[0]
                pts = []
                pps = []
                pds = []
                for ii in idxs:
                    kp = int(np_plus[ii])
                    km = int(np_minus[ii])
                    times = tau + h * np.sort(rng_slab.random(kp + km))
                    signs = np.array([1] * kp + [-1] * km, dtype=np.int8)
                    rng_slab.shuffle(signs)
                    pts.append(times)
                    pps.append(np.full(kp + km, far[ii], dtype=np.int64))
                    pds.append(signs)
                promo_t = np.concatenate(pts)
                promo_pid = np.concatenate(pps)
                promo_dir = np.concatenate(pds)
                order = np.argsort(promo_t, kind="stable")
                promo_t = promo_t[order]
                promo_pid = promo_pid[order]
                promo_dir = promo_dir[order]
                keep = np.ones(far.shape[0], dtype=bool)
                keep[idxs] = False
                far = far[keep]
                np_plus = np_plus[keep]
                np_minus = np_minus[keep]
            disp_far = (np_plus - np_minus).astype(np.int64)
            total_events += far.shape[0]

        if analyzer_on:
            # tags for the layer starting now were sampled one layer ago
            tag_prev, tag_cur = tag_cur, tag_prev
            tag_cur[:] = _col_of(positions - L, delta, colbase)
            if tau == 0.0:
                tag_prev[:] = tag_cur
            inw = (positions >= win_lo_lin) & (positions <= win_hi_lin)
            tagged = inw & (np.abs(tag_prev -
                                   _col_of(positions - L, delta, colbase))
                            <= 3)
            cnt[:] = np.bincount(positions[tagged], minlength=size)
            scan_vac = np.nonzero(cnt[win_lo_lin:win_hi_lin + 1] == 0)[0] \
                + win_lo_lin
            for x in scan_vac:
                _mark_vacant(x, tau, delta, b, col_min, col_max, colbase, J,
                             state.vacant, state.vac_wx, state.vac_wt, L)

        # room for this slab's walker jumps
        need = nj_base + m_g + 8
        if need > jump_t.shape[0]:
            cap = max(need, 2 * jump_t.shape[0])
            jump_t = np.resize(jump_t, cap)
            jump_x = np.resize(jump_x, cap)
            jump_saw = np.resize(jump_saw, cap)

        slab_events_1d(active, positions, site_count, xs_f, xs_g, istate,
                       fstate, tau, t1, t_green_end, green_times, green_on,
                       half_box, occ_accept, occ_alias, occ_off, vac_accept,
                       vac_alias, vac_off, decide_dest, jump_t, jump_x,
                       jump_saw, max_events - total_events,
                       promo_t, promo_pid, promo_dir,
                       analyzer_on, wsum, thr, wsum_lo, wsum_hi, delta, c0r,
                       colbase, J, col_min, col_max, state.bad if analyzer_on
                       else _EMPTY_I8.view(np.uint8),
                       state.bad_wx if analyzer_on else _EMPTY_I,
                       state.bad_wt if analyzer_on else _EMPTY_F,
                       state.vacant if analyzer_on
                       else _EMPTY_I8.view(np.uint8),
                       state.vac_wx if analyzer_on else _EMPTY_I,
                       state.vac_wt if analyzer_on else _EMPTY_F,
                       cnt, tag_prev if analyzer_on else _EMPTY_I,
                       state.live_from if analyzer_on else _EMPTY_F, L)
        nj_base = istate[I_NJUMP]
        if istate[I_STATUS] != OK:
            status = istate[I_STATUS]
            break

        # far endpoints take effect at the slab boundary
        if disp_far is not None and far.shape[0] > 0:
            old = positions[far]
            new = (old + disp_far) % size
            positions[far] = new
            site_count -= np.bincount(old, minlength=size)
            site_count += np.bincount(new, minlength=size)

        t_now = t1
        n_slabs += 1

    total_events += istate[I_EVENTS]
    if analyzer_on and status == OK:
        state.finish()
    return WindowedOutcome(
        status, fstate[F_TNOW], jump_t[:nj_base].copy(),
        jump_x[:nj_base].copy(), jump_saw[:nj_base].astype(bool),
        fstate[F_OCC], total_events, n_slabs, promotions,
        state if analyzer_on and status == OK else None)
