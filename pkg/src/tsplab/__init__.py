"""tsplab: a small laboratory for the travelling salesman problem.

Distance conventions (continuous and benchmark-exact), TSPLIB parsing,
exact solvers, classical heuristics, a hardness statistic, a supervised
pointer model on a minimal autodiff kernel, and an evaluation CLI.
"""

from . import exact, geometry, harness, heuristics, instances, model, tsplib_io
from .geometry import DistanceMatrix, Metric, MetricKind, Tour, build_matrix, tour_length
from .instances import (
    Instance,
    LabeledPair,
    generate_uniform,
    hardness_indicator,
    hardness_rank,
    label,
)

__version__ = "0.1.0"

__all__ = [
    "exact",
    "geometry",
    "harness",
    "heuristics",
    "instances",
    "model",
    "tsplib_io",
    "DistanceMatrix",
    "Metric",
    "MetricKind",
    "Tour",
    "build_matrix",
    "tour_length",
    "Instance",
    "LabeledPair",
    "generate_uniform",
    "hardness_indicator",
    "hardness_rank",
    "label",
    "__version__",
]
