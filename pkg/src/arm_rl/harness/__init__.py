from .config import ConfigError, RunConfig, build_run_config, parse_config_text
from .evaluate import EvalSummary, evaluate
from .plot import MetricsFormatError, plot, read_metrics
from .train import METRICS_COLUMNS, MetricsRow, run_trial, train

__all__ = [
    "ConfigError",
    "EvalSummary",
    "METRICS_COLUMNS",
    "MetricsFormatError",
    "MetricsRow",
    "RunConfig",
    "build_run_config",
    "evaluate",
    "parse_config_text",
    "plot",
    "read_metrics",
    "run_trial",
    "train",
]
