"""Verification harness: each experiment instantiates one statement on the model zoo."""
from .config import RunConfig, RunResult, load_config, parse_config, run_config, smoke_config_path
from .correlations import (TelescopingSchedule, area_law_scan, correlation_decay_scan,
                           telescoping_decomposition)
from .fits import affine_fit, classify_decay, crossing_time, fit_mixing_law, loglinear_fit, loglog_fit
from .localization import boundary_evolution_experiment, localization_experiment
from .mixing import RapidMixingFit, fit_rapid_mixing, worst_case_distance
from .table import ExperimentTable, config_hash

__all__ = [
    "ExperimentTable", "RapidMixingFit", "RunConfig", "RunResult", "TelescopingSchedule",
    "affine_fit", "area_law_scan", "boundary_evolution_experiment", "classify_decay", "config_hash",
    "correlation_decay_scan", "crossing_time", "fit_mixing_law", "fit_rapid_mixing", "load_config",
    "localization_experiment", "loglinear_fit", "loglog_fit", "parse_config", "run_config",
    "smoke_config_path", "telescoping_decomposition", "worst_case_distance",
]
