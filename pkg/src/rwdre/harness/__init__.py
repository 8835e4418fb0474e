from .stats import (mean_se, t_interval, wilson_interval,
                    poisson_cdf_exact, poisson_gof)
from .spec import (PRESETS, TheoremParameters, ExperimentSpec,
                   ReplicaRecord, RunResult, OK, BREACHED, TRUNCATED)
from .run import ExperimentOutcome, run_experiment, replica_seed
from .emit import emit_outputs, read_result_csv, result_csv_text

__all__ = ["mean_se", "t_interval", "wilson_interval", "poisson_cdf_exact",
           "poisson_gof", "PRESETS", "TheoremParameters", "ExperimentSpec",
           "ReplicaRecord", "RunResult", "OK", "BREACHED", "TRUNCATED",
           "ExperimentOutcome", "run_experiment", "replica_seed",
           "emit_outputs", "read_result_csv", "result_csv_text"]
