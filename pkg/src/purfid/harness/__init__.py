"""Config-driven sweep runner and report writers."""

from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .slopes import InsufficientPoints, SlopeFit, fit_slope
from .sweep import NumericalInvariantError, SweepError, SweepReport, run_sweep

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "InsufficientPoints",
    "NumericalInvariantError",
    "SlopeFit",
    "SweepError",
    "SweepReport",
    "fit_slope",
    "load_config",
    "parse_config",
    "run_sweep",
]
