"""Scenario configuration, experiments, output writers and the CLI."""

from .config import ScenarioConfig, load_config, preset_names
from .experiments import (
    amplification_experiment,
    convergence_experiment,
    fit_kgrande,
    glimm_suite,
    run_scenario,
    stability_experiment,
    stationary_convergence,
)

__all__ = [
    "ScenarioConfig",
    "amplification_experiment",
    "convergence_experiment",
    "fit_kgrande",
    "glimm_suite",
    "load_config",
    "preset_names",
    "run_scenario",
    "stability_experiment",
    "stationary_convergence",
]
