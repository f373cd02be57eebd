"""Config-driven Monte Carlo experiments and the ``chanlab`` command."""

from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .emit import emit
from .runners import (
    RunResult,
    run,
    run_lambda_histogram,
    run_moment_vs_oracle,
    run_ppt2_sweep,
    run_ppt_threshold_scan,
    run_spectral_experiment,
)

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "parse_config",
    "emit",
    "RunResult",
    "run",
    "run_lambda_histogram",
    "run_moment_vs_oracle",
    "run_spectral_experiment",
    "run_ppt_threshold_scan",
    "run_ppt2_sweep",
]
