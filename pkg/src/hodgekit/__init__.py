"""Numerical deformation theory: Kuranishi series, period blocks, Kahler transport and lattice arithmetic."""

from .backends import DGLABackend, DGLAData, TorusBackend, TorusForm, make_backend
from .core import BlockUpperUnipotent, Tolerances, TruncatedSeries
from .exceptions import (AliasingWarning, ConvergenceError, GuardError, HodgeKitError, RadiusWarning,
                         ShapeError, ValidationError)
from .kuranishi import BeltramiSeries, mc_residual, obstruction_series, solve_kuranishi
from .period import hodge_frame, purity_determinant, quasi_period
from .pipelines import run_scenario
from .transport import KahlerSeed, continue_path, metric_update, solve_alpha0

__version__ = "0.1.0"

__all__ = [
    "AliasingWarning", "BeltramiSeries", "BlockUpperUnipotent", "ConvergenceError", "DGLABackend", "DGLAData",
    "GuardError", "HodgeKitError", "KahlerSeed", "RadiusWarning", "ShapeError", "Tolerances", "TorusBackend",
    "TorusForm", "TruncatedSeries", "ValidationError", "continue_path", "hodge_frame", "make_backend",
    "mc_residual", "metric_update", "obstruction_series", "purity_determinant", "quasi_period", "run_scenario",
    "solve_alpha0", "solve_kuranishi",
]
