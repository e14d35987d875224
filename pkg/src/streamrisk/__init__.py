"""Robust diversion control of a Levy-driven streamflow under entropic model uncertainty."""
from .closedform import ClosedFormSolution, ModelParams, optimal_g, solve
from .levy import Divergent, LevyMeasure, TemperedStableMeasure, integrability_report
from .sim import Distortion, Policy, SimConfig, Trajectory, simulate_path, simulate_path_worst_case

__version__ = "0.1.0"

__all__ = [
    "ClosedFormSolution",
    "Distortion",
    "Divergent",
    "LevyMeasure",
    "ModelParams",
    "Policy",
    "SimConfig",
    "TemperedStableMeasure",
    "Trajectory",
    "integrability_report",
    "optimal_g",
    "simulate_path",
    "simulate_path_worst_case",
    "solve",
]
