# experiments/__init__.py
"""
Experiment commands of run_experiments.py

Exports the config loader, the error type of invalid configs and one
experiment class per command, keyed by command name in EXPERIMENTS.
"""

from .algebraic import ConditionExperiment, EliminateExperiment, NormalizeExperiment
from .base import Experiment
from .config_schema import ExperimentConfig, apply_overrides, load_config, validate_config
from .errors import ConfigError
from .numerical import AssemblyExperiment, HUMSweepExperiment, SimulateExperiment
from .spectral_runs import CounterexampleExperiment, FattoriniExperiment

EXPERIMENTS = {
    cls.command: cls
    for cls in (
        EliminateExperiment, ConditionExperiment, NormalizeExperiment, SimulateExperiment,
        HUMSweepExperiment, CounterexampleExperiment, FattoriniExperiment, AssemblyExperiment,
    )
}


def create_experiment(config: ExperimentConfig, tracker=None, converter=None) -> Experiment:
    return EXPERIMENTS[config.command](config, tracker, converter)


__all__ = [
    'ConfigError', 'ExperimentConfig', 'load_config', 'validate_config', 'apply_overrides',
    'Experiment', 'EXPERIMENTS', 'create_experiment',
    'EliminateExperiment', 'ConditionExperiment', 'NormalizeExperiment', 'SimulateExperiment',
    'HUMSweepExperiment', 'CounterexampleExperiment', 'FattoriniExperiment', 'AssemblyExperiment',
]
