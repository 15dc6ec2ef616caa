"""Numerical experiments on norm inflation and randomized data for the power-law NLS."""

__version__ = "0.1.0"

from . import bubbles, grid, randomization, sobolev, solver
from .bubbles import (BubbleParams, CutoffProfile, Ladder, Mollifier, ProblemParams,
                      TanghuruSpec)
from .grid import Field, GridSpec
from .solver import SolverConfig, evolve

__all__ = [
    "__version__", "bubbles", "grid", "randomization", "sobolev", "solver",
    "BubbleParams", "CutoffProfile", "Ladder", "Mollifier", "ProblemParams", "TanghuruSpec",
    "Field", "GridSpec", "SolverConfig", "evolve",
]
