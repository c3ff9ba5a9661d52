"""Simulation engine: environment, configuration, log ingestion, runner and CLI."""

from .config import ExperimentConfig, config_from_dict, parse_config
from .env import Environment
from .logs import EmpiricalLog, ingest_log, read_log
from .runner import run_experiment, run_replication

__all__ = [
    "EmpiricalLog",
    "Environment",
    "ExperimentConfig",
    "config_from_dict",
    "ingest_log",
    "parse_config",
    "read_log",
    "run_experiment",
    "run_replication",
]
