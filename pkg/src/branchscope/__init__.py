"""Simulation and limit-law toolkit for supercritical branching processes
with joint lifetime and offspring laws, focused on the longest edges."""

from .engine import PointProcess, RunResult, SimulationConfig, Status, run, run_naive, run_replicates
from .functions import PiecewiseLinear
from .kernel import BACKEND
from .malthus import MalthusProfile, solve_malthus
from .model import (
    Constant,
    CorrelatedPoissonOffspring,
    Geometric,
    IndependentExpLifetime,
    IndependentParetoLifetime,
    LifetimeOffspringModel,
    TwoPoint,
    catalogue,
    validate,
)
from .stats import Analysis, EnsembleReport, run_ensemble

__version__ = "0.1.0"

__all__ = [
    "Analysis", "BACKEND", "Constant", "CorrelatedPoissonOffspring", "EnsembleReport",
    "Geometric", "IndependentExpLifetime", "IndependentParetoLifetime",
    "LifetimeOffspringModel", "MalthusProfile", "PiecewiseLinear", "PointProcess",
    "RunResult", "SimulationConfig", "Status", "TwoPoint", "catalogue", "run",
    "run_ensemble", "run_naive", "run_replicates", "solve_malthus", "validate",
]
