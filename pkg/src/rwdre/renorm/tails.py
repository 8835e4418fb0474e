"""Monte Carlo tail frequencies of block-path statistics.

One windowed run per replica sweeps the field to the last layer boundary
while the walker's clock stops at its horizon; the engine labels blocks
bad / vacant on the fly.  Three per-replica statistics come out:

* phi: the largest number of bad blocks any admissible itinerary through
  a fixed column grid around the origin can collect within its jump
  budget (the walker's own block path is one such itinerary, so this
  dominates the count of bad blocks it actually met);
* the number of bad blocks on the walker's block path;
* the time the walker spends in good-but-vacant blocks.

The reported events compare these against density-scaled thresholds; all
replica seeds are shared across densities so tail curves are comparable
replica by replica.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

from .. import _engine
from .._rng import derive_seed
from ..environment import ParticleField, default_box_radius
from ..harness.stats import wilson_interval
from ..model import DYNAMIC, ModelConfig
from ..walker import GreenPath, _raise_on_status, _windowed_run
from .animal import path_blocks, time_in_blocks
from .dp import phi_sup_array
from .grid import BlockGrid
from .params import RenormParams

__all__ = ["TailSpec", "measure_block_tails", "tail_cell_key"]


@dataclass(frozen=True)
class TailSpec:
    """Horizon, jump budget, thresholds and replication for a tail run.

    ell is the itinerary jump budget; None means 2 * t.  phi_cols fixes
    the half-width (in columns) of the grid the itinerary statistic is
    evaluated on.  max_events is deliberately far above the field default
    because the labelled sweep keeps every visited column exact for the
    whole run.
    """
    t: float
    ell: int | None = None
    eps0: float = 0.01
    eps1: float = 0.1
    mus: tuple = (1.0, 16.0)
    replicas: int = 50
    base_seed: int = 7
    phi_cols: int = 8
    max_events: int = 2_000_000_000
    box_radius: int | None = None

    def __post_init__(self):
        if self.t <= 0:
            raise ValueError("horizon must be positive")
        if self.replicas <= 0:
            raise ValueError("need at least one replica")
        if self.phi_cols < 0:
            raise ValueError("phi_cols must be nonnegative")

    @property
    def resolved_ell(self) -> int:
        return int(2 * self.t) if self.ell is None else int(self.ell)


def tail_cell_key(mu: float, params: RenormParams, spec: TailSpec) -> str:
    return (f"mu={float(mu):g},r={params.r},C0={params.c0},"
            f"eps0={spec.eps0:g},eps1={spec.eps1:g}")


def measure_block_tails(config: ModelConfig, params: RenormParams,
                        spec: TailSpec) -> dict:
    """Tail frequencies of the three block events at each density.

    Returns a JSON-ready report: thresholds, then one cell per density
    with event counts, frequencies, 95% Wilson intervals, mean statistic
    values and the breach / truncation bookkeeping.  Replicas that end in
    a breach or a tracking truncation are excluded from the denominator.
    """
    if config.d != 1:
        raise ValueError("block tails need the 1-d windowed engine")
    if config.mode != DYNAMIC:
        raise ValueError("block tails are defined for the dynamic field")
    delta = params.delta
    J = int(math.ceil(spec.t / delta))
    t_sweep = float(J * delta)
    ell = spec.resolved_ell
    thr_phi = spec.eps0 * (spec.t + ell) / delta
    thr_gam = 3.0 * spec.eps0 * spec.t / delta
    thr_lam = spec.eps1 * spec.t
    box = spec.box_radius
    if box is None:
        box = default_box_radius(t_sweep)

    cells = {}
    for mu in spec.mus:
        params_mu = dataclasses.replace(params, mu=float(mu))
        config_mu = dataclasses.replace(config, mu=float(mu))
        grid = BlockGrid(params_mu, float(spec.t))
        setup = _engine.AnalyzerSetup(delta, params_mu.q_len,
                                      params_mu.u_threshold, J,
                                      -spec.phi_cols, spec.phi_cols)
        n_ok = 0
        breaches = 0
        truncations = 0
        k_phi = k_gam = k_lam = 0
        s_phi = s_gam = s_lam = s_animal = 0.0
        unverified = 0
        for i in range(spec.replicas):
            seed_f = derive_seed(spec.base_seed, i, 31)
            seed_w = derive_seed(spec.base_seed, i, 32)
            fld = ParticleField(config_mu, box, seed_f)
            out = _windowed_run(fld, config_mu, float(spec.t), t_sweep,
                                seed_w, spec.max_events, float(delta),
                                setup=setup)
            if out.status == _engine.BREACH:
                breaches += 1
                continue
            if out.status == _engine.HISTORY_MISS:
                truncations += 1
                continue
            if out.status != _engine.OK:
                _raise_on_status(out.status, out)
            a = out.analyzer
            path = GreenPath(out.jump_t, out.jump_x, out.jump_saw,
                             min(out.occupied_time, float(spec.t)),
                             float(spec.t), d=1)

            lo = -spec.phi_cols - a.col_min
            hi = spec.phi_cols - a.col_min
            if not a.valid[lo:hi + 1].all():
                raise RuntimeError("fixed column grid lost coverage")
            phi_val = phi_sup_array(a.bad[lo:hi + 1], -spec.phi_cols, ell)

            blocks = path_blocks(path, grid)
            n_gam = 0
            lam = []
            for bi, bj in blocks:
                idx = bi - a.col_min
                if not (0 <= idx < a.n_cols) or not a.valid[idx, bj]:
                    unverified += 1
                    continue
                if a.bad[idx, bj]:
                    n_gam += 1
                elif a.vacant[idx, bj]:
                    lam.append((bi, bj))
            lam_time = time_in_blocks(path, grid, lam)

            n_ok += 1
            s_phi += phi_val
            s_gam += n_gam
            s_lam += lam_time
            s_animal += len(blocks)
            k_phi += phi_val >= thr_phi
            k_gam += n_gam >= thr_gam
            k_lam += lam_time >= thr_lam

        if n_ok == 0:
            raise RuntimeError(f"no surviving replicas at mu={mu}")
        cells[tail_cell_key(mu, params, spec)] = {
            "mu": float(mu),
            "n_ok": n_ok,
            "breaches": breaches,
            "truncations": truncations,
            "events": {"phi": k_phi, "gamma_bad": k_gam, "lambda": k_lam},
            "freq": {"phi": k_phi / n_ok, "gamma_bad": k_gam / n_ok,
                     "lambda": k_lam / n_ok},
            "wilson95": {
                "phi": wilson_interval(k_phi, n_ok),
                "gamma_bad": wilson_interval(k_gam, n_ok),
                "lambda": wilson_interval(k_lam, n_ok),
            },
            "mean": {"phi": s_phi / n_ok, "gamma_bad": s_gam / n_ok,
                     "lambda_time": s_lam / n_ok,
                     "path_blocks": s_animal / n_ok},
            "unverified_blocks": unverified,
        }

    return {
        "schema": 1,
        "kind": "block_tails",
        "t": float(spec.t),
        "ell": ell,
        "delta": delta,
        "r": params.r,
        "c0": params.c0,
        "gamma0": params.gamma0,
        "eps0": spec.eps0,
        "eps1": spec.eps1,
        "replicas": spec.replicas,
        "base_seed": spec.base_seed,
        "phi_cols": spec.phi_cols,
        "thresholds": {"phi": thr_phi, "gamma_bad": thr_gam,
                       "lambda": thr_lam},
        "cells": cells,
    }
