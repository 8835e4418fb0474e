"""Replica orchestration for the experiment presets.

Every preset reduces to a list of independent replica tasks plus an
aggregation step.  Replica i of a spec always uses the seeds
derive_seed(base_seed, i, 11) for the field and derive_seed(base_seed,
i, 12) for the walker, so partial re-runs and worker counts never change
a replica's realization; cells of a grid share replica seeds, which
makes cross-cell comparisons common-random-number comparisons.
"""

from __future__ import annotations

import dataclasses
import math
import time
from concurrent.futures import ProcessPoolExecutor
import multiprocessing

import numpy as np

from .._rng import derive_seed
from ..environment import BudgetError, ParticleField, default_box_radius
from ..model import (ConfigError, DYNAMIC, FROZEN, ModelConfig,
                     solomon_critical_densities)
from ..renorm.params import check_constants
from ..walker import (BreachError, empirical_speed, martingale_residual,
                      rho_hat, rho_hat_jumps, simulate_green)
from .spec import (BREACHED, OK, TRUNCATED, ExperimentSpec, ReplicaRecord,
                   RunResult)
from .stats import mean_se, t_interval, wilson_interval

DYNAMIC_COLUMNS = ("speed", "rho_time", "rho_jumps", "residual_over_t",
                   "n_jumps", "events")
_NAN_ROW = (math.nan,) * len(DYNAMIC_COLUMNS)

DEFAULT_MUS = (0.5, 1.0, 2.0, 4.0, 8.0, 16.0)


def replica_seed(base_seed, index: int, stream: int = 11):
    """Documented replica seed split; stream 11 feeds the field, 12 the
    walker."""
    return derive_seed(base_seed, int(index), int(stream))


def _walk_replica(task):
    (model_dict, t, box_radius, base_seed, index, key, slab_width,
     max_events) = task
    config = ModelConfig.from_dict(model_dict)
    fld = ParticleField(config, box_radius, replica_seed(base_seed, index))
    try:
        path, trace = simulate_green(
            fld, config, t, replica_seed(base_seed, index, 12),
            max_events=max_events, slab_width=slab_width)
    except BreachError:
        return ReplicaRecord(key, index, BREACHED, _NAN_ROW)
    except BudgetError:
        return ReplicaRecord(key, index, TRUNCATED, _NAN_ROW)
    return ReplicaRecord(key, index, OK, (
        float(empirical_speed(path)), rho_hat(path), rho_hat_jumps(path),
        float(martingale_residual(trace, t)), float(path.n_jumps),
        float(fld.event_count)))


def _run_tasks(tasks, workers: int):
    if workers > 1:
        ctx = multiprocessing.get_context("fork")
        chunk = max(1, len(tasks) // (4 * workers))
        with ProcessPoolExecutor(max_workers=workers,
                                 mp_context=ctx) as pool:
            return list(pool.map(_walk_replica, tasks, chunksize=chunk))
    return [_walk_replica(task) for task in tasks]


def _walk_grid(spec: ExperimentSpec, cells, workers: int) -> RunResult:
    """cells: list of (key, model_config).  Replica seeds are shared
    across cells."""
    opts = spec.options
    box = opts.get("box_radius")
    slab = float(opts.get("slab_width", 256.0))
    max_events = opts.get("max_events")
    tasks = []
    for key, config in cells:
        b = int(box) if box is not None else default_box_radius(spec.t)
        for i in range(spec.replicas):
            tasks.append((config.to_dict(), float(spec.t), b,
                          spec.base_seed, i, key, slab, max_events))
    return RunResult(spec.preset, DYNAMIC_COLUMNS,
                     tuple(_run_tasks(tasks, workers)))


def _cell_stats(result: RunResult, key: str, config: ModelConfig,
                t: float) -> dict:
    recs = [r for r in result.cell(key) if r.status == OK]
    out = dict(result.counts(key))
    if len(recs) < 2:
        out["insufficient"] = True
        return out
    speeds = np.array([r.values[0] for r in recs])
    rho_t = np.array([r.values[1] for r in recs])
    rho_j = np.array([r.values[2] for r in recs])
    resid = np.array([r.values[3] for r in recs])
    v, se_v = mean_se(speeds)
    rho, se_rho = mean_se(rho_t)
    v_occ = float(config.drift_occupied[0])
    v_vac = float(config.drift_vacant[0])
    predicted = rho * v_occ + (1.0 - rho) * v_vac
    se_comb = math.sqrt(se_v ** 2 + ((v_occ - v_vac) * se_rho) ** 2)
    out.update({
        "v_hat": v, "se_speed": se_v,
        "ci99_speed": list(t_interval(speeds, level=0.99)),
        "rho_time": rho, "se_rho": se_rho,
        "rho_jumps": float(rho_j.mean()),
        "decomposition_predicted": predicted,
        "decomposition_gap": abs(v - predicted),
        "decomposition_se": se_comb,
        "decomposition_ok": bool(abs(v - predicted) <= 3.0 * se_comb),
        "mean_abs_residual_over_t": float(np.abs(resid).mean()),
        "residual_ok": bool(np.abs(resid).mean() < 3.0 / math.sqrt(t)),
    })
    return out


def _sign_class(ci_lo: float, ci_hi: float) -> str:
    if ci_hi < 0.0:
        return "negative"
    if ci_lo > 0.0:
        return "positive"
    return "zero-consistent"


def _speed_curve(spec: ExperimentSpec, workers: int):
    mus = tuple(spec.options.get("mus", DEFAULT_MUS))
    cells = [(f"mu={float(mu):g}",
              dataclasses.replace(spec.model, mu=float(mu))) for mu in mus]
    result = _walk_grid(spec, cells, workers)
    summary_cells = {}
    for (key, config), mu in zip(cells, mus):
        cell = _cell_stats(result, key, config, spec.t)
        cell["mu"] = float(mu)
        summary_cells[key] = cell
    return result, {"cells": summary_cells}


def _static_solomon(spec: ExperimentSpec, workers: int):
    if spec.model.mode != FROZEN:
        raise ConfigError("static_solomon needs a frozen-mode model")
    ps = tuple(spec.options.get("p_values", (0.7,)))
    mus = tuple(spec.options.get("mus", (0.1, 0.7, 2.0)))
    cells = []
    grid = []
    for p in ps:
        for mu in mus:
            key = f"p={float(p):g},mu={float(mu):g}"
            cells.append((key, ModelConfig.solomon(float(p), float(mu),
                                                   mode=FROZEN)))
            grid.append((float(p), float(mu)))
    result = _walk_grid(spec, cells, workers)
    summary_cells = {}
    for (key, config), (p, mu) in zip(cells, grid):
        cell = _cell_stats(result, key, config, spec.t)
        cell["p"] = p
        cell["mu"] = mu
        lo, hi = solomon_critical_densities(p)
        cell["mu_c_minus"] = lo
        cell["mu_c_plus"] = hi
        if "ci99_speed" in cell:
            cell["sign_class"] = _sign_class(*cell["ci99_speed"])
            below, above = mu < lo, mu > hi
            cell["predicted_class"] = ("negative" if below else
                                       "positive" if above else
                                       "zero-consistent")
        summary_cells[key] = cell
    return result, {"cells": summary_cells}


def _single_run(spec: ExperimentSpec, workers: int):
    cells = [("run", spec.model)]
    result = _walk_grid(spec, cells, workers)
    cell = _cell_stats(result, "run", spec.model, spec.t)
    cell["mu"] = spec.model.mu
    return result, {"cells": {"run": cell}}


def _block_tails(spec: ExperimentSpec, workers: int):
    # imported here because the block modules use harness.stats
    from ..renorm.tails import TailSpec, measure_block_tails
    opts = spec.options
    tail_spec = TailSpec(
        t=float(spec.t),
        ell=opts.get("ell"),
        eps0=spec.theorem.eps0,
        eps1=spec.theorem.eps1,
        mus=tuple(opts.get("mus", (1.0, 16.0))),
        replicas=spec.replicas,
        base_seed=spec.base_seed,
        phi_cols=int(opts.get("phi_cols", 8)),
        max_events=int(opts.get("max_events", 2_000_000_000)),
        box_radius=opts.get("box_radius"))
    report = measure_block_tails(spec.model, spec.renorm, tail_spec)
    columns = ("mu", "n_ok", "breaches", "truncations", "freq_phi",
               "freq_gamma_bad", "freq_lambda", "mean_phi",
               "mean_gamma_bad", "mean_lambda_time", "mean_path_blocks",
               "unverified_blocks")
    records = []
    for key, cell in report["cells"].items():
        records.append(ReplicaRecord(key, 0, OK, (
            cell["mu"], float(cell["n_ok"]), float(cell["breaches"]),
            float(cell["truncations"]), cell["freq"]["phi"],
            cell["freq"]["gamma_bad"], cell["freq"]["lambda"],
            cell["mean"]["phi"], cell["mean"]["gamma_bad"],
            cell["mean"]["lambda_time"], cell["mean"]["path_blocks"],
            float(cell["unverified_blocks"]))))
    result = RunResult(spec.preset, columns, tuple(records))
    return result, dict(report)


def _coverage_probe(spec: ExperimentSpec, workers: int):
    # imported here because the block modules use harness.stats
    from ..renorm.coverage import conditional_coverage, estimate_f_r, mu_one
    opts = spec.options
    probe = opts.get("probe", "f")
    params = spec.renorm
    columns = ("f_hat", "ci_lo", "ci_hi", "covered", "replicas",
               "n_particles", "mu_one")
    records = []
    cells = {}
    if probe not in ("f", "closed_loop"):
        raise ConfigError(f"unknown coverage probe {probe!r}")
    scenarios = tuple(opts.get("scenarios", ("uniform", "corner")))
    n_particles = opts.get("n_particles")
    estimates = estimate_f_r(params, replicas=spec.replicas,
                             seed=spec.base_seed, scenarios=scenarios,
                             n_particles=n_particles)
    for scenario in scenarios:
        est = estimates[scenario]
        mu1 = (mu_one(est.f_hat, params.gamma0, spec.theorem.eps1)
               if 0.0 < est.f_hat < 1.0 else math.nan)
        records.append(ReplicaRecord(f"scenario={scenario}", 0, OK, (
            est.f_hat, est.ci95[0], est.ci95[1], float(est.covered),
            float(est.replicas), float(est.n_particles), mu1)))
        cells[f"scenario={scenario}"] = {
            "scenario": scenario, "f_hat": est.f_hat,
            "ci95": list(est.ci95), "covered": est.covered,
            "replicas": est.replicas, "n_particles": est.n_particles,
            "mu_one": mu1,
        }
    if probe == "closed_loop":
        scenario = opts.get("loop_scenario", scenarios[0])
        mu1 = cells[f"scenario={scenario}"]["mu_one"]
        if not math.isfinite(mu1):
            raise ConfigError(
                f"scenario {scenario!r} gave a degenerate cover estimate; "
                "cannot close the loop")
        loop_replicas = int(opts.get("loop_replicas", spec.replicas))
        cond = conditional_coverage(
            dataclasses.replace(params, mu=float(mu1)),
            replicas=loop_replicas,
            seed=derive_seed(spec.base_seed, 1),
            box_radius=opts.get("box_radius"))
        target = spec.theorem.eps1
        cells["closed_loop"] = {
            "scenario": scenario,
            "mu_one": mu1,
            "replicas": loop_replicas,
            "pedestal_count": cond.pedestal_count,
            "joint_count": cond.joint_count,
            "p_gap_given_pedestal": cond.p_gap_given_pedestal,
            "se": cond.se,
            "ci95": list(cond.ci95),
            "target_eps1": target,
            "within_target": bool(cond.p_gap_given_pedestal
                                  <= target + 2.0 * cond.se),
        }
    result = RunResult(spec.preset, columns, tuple(records))
    return result, {"cells": cells}


def _constants_report(spec: ExperimentSpec, workers: int):
    if spec.theorem.c4 is None:
        raise ConfigError("constants_report needs theorem.c4 (an external "
                          "input, not derivable here)")
    r_max = int(spec.options.get("r_max", 8))
    report = check_constants(spec.renorm, spec.theorem.c4, r_max)
    columns = ("const3_lhs", "const3_rhs", "const3_ok", "const4_log",
               "const4_ok")
    records = []
    for row in report["rows"]:
        records.append(ReplicaRecord(f"r={row['r']}", 0, OK, (
            row["const3_lhs"], row["const3_rhs"],
            float(row["const3_ok"]), row["const4_log"],
            float(row["const4_ok"]))))
    result = RunResult(spec.preset, columns, tuple(records))
    return result, dict(report)


_DRIVERS = {
    "speed_curve": _speed_curve,
    "rho_curve": _speed_curve,        # same grid, report reads rho columns
    "static_solomon": _static_solomon,
    "single_run": _single_run,
    "block_tails": _block_tails,
    "coverage_probe": _coverage_probe,
    "constants_report": _constants_report,
}

BREACH_RATE_LIMIT = 0.01


@dataclasses.dataclass(frozen=True)
class ExperimentOutcome:
    spec: ExperimentSpec
    result: RunResult
    summary: dict
    flags: tuple
    # wall time is carried here, never in summary, so result bytes stay
    # reproducible
    runtime_seconds: float = 0.0


def run_experiment(spec: ExperimentSpec, workers: int = 1
                   ) -> ExperimentOutcome:
    """Execute a spec and aggregate; emission is a separate step.

    The summary reports, for every cell, exactly
    ok + breaches + truncations = replicas; a breach rate above 1% flags
    the whole result as unreliable rather than failing it.
    """
    if spec.preset in ("speed_curve", "rho_curve", "single_run") \
            and spec.model.mode != DYNAMIC:
        raise ConfigError(f"{spec.preset} needs a dynamic-mode model")
    started = time.perf_counter()
    driver = _DRIVERS[spec.preset]
    result, patch = driver(spec, int(workers))
    flags = []
    rate = result.breach_rate()
    if spec.preset == "block_tails":
        totals = list(patch.get("cells", {}).values())
        n_b = sum(c["breaches"] for c in totals)
        n_all = sum(c["n_ok"] + c["breaches"] + c["truncations"]
                    for c in totals)
        rate = n_b / n_all if n_all else 0.0
    if rate > BREACH_RATE_LIMIT:
        flags.append("unreliable: breach rate "
                     f"{rate:.3g} exceeds {BREACH_RATE_LIMIT:g}")
    summary = {
        "schema": 1,
        "kind": spec.preset,
        "spec_hash": spec.spec_hash(),
        "t": spec.t,
        "replicas": spec.replicas,
        "base_seed": spec.base_seed,
        "counts": result.counts(),
        "breach_rate": rate,
    }
    summary.update(patch)
    summary["flags"] = flags
    return ExperimentOutcome(spec=spec, result=result, summary=summary,
                             flags=tuple(flags),
                             runtime_seconds=time.perf_counter() - started)
