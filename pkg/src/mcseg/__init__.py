"""Multicut solver for supervised and unsupervised segmentation energies."""

from .engine import SolveOptions, SolveResult, lower_and_upper, solve
from .model import (
    HOPotts,
    LPI,
    Factor,
    FactorGraph,
    Junction,
    ModelError,
    Potts,
    Table,
    eval_energy,
)
from .reduction import MulticutInstance, build_multicut
from .separation import parse_schedule
from .simplex import ConstraintRow

__all__ = [
    "ConstraintRow",
    "Factor",
    "FactorGraph",
    "HOPotts",
    "Junction",
    "LPI",
    "ModelError",
    "MulticutInstance",
    "Potts",
    "SolveOptions",
    "SolveResult",
    "Table",
    "build_multicut",
    "eval_energy",
    "lower_and_upper",
    "parse_schedule",
    "solve",
]

__version__ = "0.1.0"
