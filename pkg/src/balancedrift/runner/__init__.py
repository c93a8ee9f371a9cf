from .config import BASELINE, ConfigError, ExperimentConfig, ExplainSettings, load_config, parse_config
from .experiment import GridCellResult, RunSummary, read_results_csv, resolve_datasets, run, write_results
from .plot import GainRow, performance_gain_table, render_gain_plot

__all__ = [
    "BASELINE",
    "ConfigError",
    "ExperimentConfig",
    "ExplainSettings",
    "GainRow",
    "GridCellResult",
    "RunSummary",
    "load_config",
    "parse_config",
    "performance_gain_table",
    "read_results_csv",
    "render_gain_plot",
    "resolve_datasets",
    "run",
    "write_results",
]
