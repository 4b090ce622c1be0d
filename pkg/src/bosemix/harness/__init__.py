"""Configuration, sweeps, rate fits and the command-line interface."""

from .config import ConfigError, RunConfig, load_config, validate_config
from .fit import RateFit, fit_rate
from .plots import emit_plots
from .sweep import run_sweep
