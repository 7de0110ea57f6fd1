"""Experiment harness: configs, FedPDD and baseline runs, sweeps, CSV outputs."""

from .config import AXES, PROFILES, CsvSource, ExperimentConfig, Sweep, from_dict, load_config
from .experiment import (
    Accuracies,
    CurveRow,
    MetricsReport,
    RunRow,
    build_views,
    evaluate,
    run_baseline,
    run_experiment,
    run_seed,
)
from .outputs import emit_plots_data

__all__ = [
    "AXES",
    "PROFILES",
    "Accuracies",
    "CsvSource",
    "CurveRow",
    "ExperimentConfig",
    "MetricsReport",
    "RunRow",
    "Sweep",
    "build_views",
    "emit_plots_data",
    "evaluate",
    "from_dict",
    "load_config",
    "run_baseline",
    "run_experiment",
    "run_seed",
]
