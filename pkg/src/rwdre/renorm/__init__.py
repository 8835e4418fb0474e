"""Multiscale block machinery: constants, grids, labels, path statistics.

Space-time is cut into delta x delta blocks whose side grows like the
sixth power of the scale base.  A block is bad when some sliding site
window inside its enlarged neighbourhood dips below a density threshold,
vacant when some site of the block goes uncovered by the particles that
started in its pedestal.  On top of the labels sit itinerary suprema
(dp), walker block paths (animal), coverage probes (coverage), separated
sub-families (families) and Monte Carlo tail frequencies (tails).
"""

from .animal import (gamma_tilde, lambda_set, lattice_animal, path_blocks,
                     path_segments, phi_r, time_in_blocks)
from .classify import (BlockClassification, FieldEventLog, LogError,
                       classify_blocks, record_field_log)
from .coverage import (ConditionalCoverage, CoverageEstimate,
                       conditional_coverage, coverage_event, estimate_f_r,
                       mu_one, pedestal_event)
from .dp import (StateBudgetError, phi_event_query, phi_sup_array,
                 phi_sup_dp)
from .families import (GENERAL, MODES, SAME_ROW, extract_separated,
                       separated_family)
from .grid import BlockGrid, PathClass, default_space_bound, u_r
from .params import (RenormParams, check_constants, chernoff_bound,
                     const1_product, gamma_sequence)
from .tails import TailSpec, measure_block_tails, tail_cell_key

__all__ = [
    "BlockClassification", "BlockGrid", "ConditionalCoverage",
    "CoverageEstimate", "FieldEventLog", "GENERAL", "LogError", "MODES",
    "PathClass", "RenormParams", "SAME_ROW", "StateBudgetError", "TailSpec",
    "check_constants", "chernoff_bound", "classify_blocks",
    "conditional_coverage", "const1_product", "coverage_event",
    "default_space_bound", "estimate_f_r", "extract_separated",
    "gamma_sequence", "gamma_tilde", "lambda_set", "lattice_animal",
    "measure_block_tails", "mu_one", "path_blocks", "path_segments",
    "pedestal_event", "phi_event_query", "phi_r", "phi_sup_array",
    "phi_sup_dp", "record_field_log", "separated_family", "tail_cell_key",
    "time_in_blocks", "u_r",
]
