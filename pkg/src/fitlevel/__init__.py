"""Fitness-level bounds and Monte-Carlo checks for non-elitist mutation-only EAs."""
from .levels import (
    BoundMatrix,
    Kind,
    LevelPartition,
    NotMonotoneError,
    PopulationVector,
    is_monotone,
    validate_bound_pair,
)

__all__ = [
    "BoundMatrix",
    "Kind",
    "LevelPartition",
    "NotMonotoneError",
    "PopulationVector",
    "is_monotone",
    "validate_bound_pair",
]
__version__ = "0.1.0"
