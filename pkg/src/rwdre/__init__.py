"""Random walk in a dynamic red-particle environment, with a multi-scale
block analyzer and an experiment harness."""

from .model import (
    ConfigError, Kernel, ModelConfig, DYNAMIC, FROZEN, kernel_mean,
    load_config, solomon_critical_densities, solomon_kernels,
)
from .environment import (
    BudgetError, FieldSnapshot, ParticleField, default_box_radius,
    init_poisson,
)
from .walker import (
    BreachError, GeneratorTrace, GreenPath, empirical_speed,
    martingale_residual, rho_hat, rho_hat_jumps, run_static_solomon,
    simulate_green,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "Kernel", "ModelConfig", "DYNAMIC", "FROZEN",
    "kernel_mean", "load_config", "solomon_critical_densities",
    "solomon_kernels", "BudgetError", "FieldSnapshot", "ParticleField",
    "default_box_radius", "init_poisson", "BreachError", "GeneratorTrace",
    "GreenPath", "empirical_speed", "martingale_residual", "rho_hat",
    "rho_hat_jumps", "run_static_solomon", "simulate_green", "__version__",
]
