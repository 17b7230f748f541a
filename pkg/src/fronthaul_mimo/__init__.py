"""Uplink rate analysis and fronthaul-constrained design optimization for
quantized multi-antenna receivers: closed forms, a concave constraint-curve
search, and a link-level Monte Carlo validator."""

from .errors import (
    ConfigError,
    ConfigSyntaxError,
    ConfigValueError,
    InfeasibleError,
    InsufficientTrialsError,
    PilotExcessTooSmallError,
    PilotOverheadError,
    SweepPointError,
)
from .linkrate import RateBreakdown, achievable_rate, estimation_quality, sinqr
from .montecarlo import (
    EmpiricalRate,
    McBlock,
    PilotMatrix,
    PowerDelayProfile,
    empirical_rate,
    generate_pilots,
    quantize_block,
)
from .optimizer import (
    OptimizationResult,
    SearchState,
    maximize_over_s,
    optimize_full,
    rate_of_s,
    threshold_f,
)
from .sysmodel import (
    DesignPoint,
    LinkBudget,
    SystemConfig,
    link_budget,
    pathloss_linear,
    quantization_distortion_variance,
)

__all__ = [
    "ConfigError",
    "ConfigSyntaxError",
    "ConfigValueError",
    "DesignPoint",
    "EmpiricalRate",
    "InfeasibleError",
    "InsufficientTrialsError",
    "LinkBudget",
    "McBlock",
    "OptimizationResult",
    "PilotExcessTooSmallError",
    "PilotMatrix",
    "PilotOverheadError",
    "PowerDelayProfile",
    "RateBreakdown",
    "SearchState",
    "SweepPointError",
    "SystemConfig",
    "achievable_rate",
    "empirical_rate",
    "estimation_quality",
    "generate_pilots",
    "link_budget",
    "maximize_over_s",
    "optimize_full",
    "pathloss_linear",
    "quantization_distortion_variance",
    "quantize_block",
    "rate_of_s",
    "sinqr",
    "threshold_f",
]

__version__ = "0.1.0"
