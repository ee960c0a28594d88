"""Diffusion NLMS networks with adaptive node sampling and censoring."""

from .adaptive import (Algorithm, DiffusionEngine, IterationRecord, RunMode,
                       SamplingController, diffusion_iteration)
from .harness import ConfigError, ScenarioConfig, run_scenario, sweep, theory_for
from .metrics import RunSummary
from .network import NetworkTopology, build_random_geometric_network
from .signals import NoiseProfile
from .theory import TheoryReport, theory_report

__version__ = "0.1.0"

__all__ = [
    "Algorithm",
    "ConfigError",
    "DiffusionEngine",
    "IterationRecord",
    "NetworkTopology",
    "NoiseProfile",
    "RunMode",
    "RunSummary",
    "SamplingController",
    "ScenarioConfig",
    "TheoryReport",
    "build_random_geometric_network",
    "diffusion_iteration",
    "run_scenario",
    "sweep",
    "theory_for",
    "theory_report",
]
