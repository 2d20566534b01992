"""Experiment harness: configs, runners, sweeps, parameter files, CLI."""

from .config import ExperimentConfig
from .params_io import load_params, save_params
from .run import run_experiment, run_sweep, table1_grid

__all__ = ["ExperimentConfig", "load_params", "save_params",
           "run_experiment", "run_sweep", "table1_grid"]
