"""Biased random walks on supercritical bond-percolation clusters.

Simulation of the walk and its regeneration structure, trap and
dead-end censuses, coarse-grained goodness classification, and
electrical-network bounds, all driven by counter-based RNG so every
result is reproducible from a pair of integer seeds.
"""

__version__ = "0.1.0"

from .errors import (
    PercwalkError,
    ParameterError,
    ResourceLimitError,
    SamplingBudgetError,
    TruncationError,
    DeadWalkerError,
    SolverError,
    InsufficientDataError,
    EstimationError,
    WeightRangeError,
)
from .lattice import BondConfiguration, Site, Edge, Rect

__all__ = [
    "__version__",
    "PercwalkError",
    "ParameterError",
    "ResourceLimitError",
    "SamplingBudgetError",
    "TruncationError",
    "DeadWalkerError",
    "SolverError",
    "InsufficientDataError",
    "EstimationError",
    "WeightRangeError",
    "BondConfiguration",
    "Site",
    "Edge",
    "Rect",
]
