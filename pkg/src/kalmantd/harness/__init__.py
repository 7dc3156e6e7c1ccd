from .config import ExperimentConfig, default_config, parse_config_file, serialize_config
from .metrics import MetricSeries, normalized_param_error, parse_csv, write_csv
from .runner import evaluate_greedy_policy, run_experiment

__all__ = [
    "ExperimentConfig",
    "MetricSeries",
    "default_config",
    "evaluate_greedy_policy",
    "normalized_param_error",
    "parse_config_file",
    "parse_csv",
    "run_experiment",
    "serialize_config",
    "write_csv",
]
