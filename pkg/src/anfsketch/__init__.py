"""Neighbourhood-function estimation with HyperLogLog balls, MinHash and exact BFS references."""

__version__ = "0.1.0"

from .errors import (
    AnfSketchError,
    BudgetExceeded,
    CapacityError,
    ConfigurationError,
    EmptyGraphError,
    FormatError,
    ParameterError,
    ParseError,
    UndefinedMetricError,
    UnsupportedMetricError,
)
from .graph import Graph, gnm_random, load_edge_list, ring_lattice
from .hyperball import BallTable, counter_union_round, run_hyperball
from .metrics import (
    DistanceDistribution,
    SmallWorldReport,
    average_path_length,
    avg_clustering,
    dispersion_index,
    distance_distribution,
    num_nodes_dist_from,
    small_world_coefficient,
)
from .oracle import ExactBallTable, bfs_balls, exact_average_path_length, exact_distance_distribution
from .sketch import HllCounter, MinHashSignature, NeighbourhoodSketch, estimate_intersection

__all__ = [
    "AnfSketchError",
    "BallTable",
    "BudgetExceeded",
    "CapacityError",
    "ConfigurationError",
    "DistanceDistribution",
    "EmptyGraphError",
    "ExactBallTable",
    "FormatError",
    "Graph",
    "HllCounter",
    "MinHashSignature",
    "NeighbourhoodSketch",
    "ParameterError",
    "ParseError",
    "SmallWorldReport",
    "UndefinedMetricError",
    "UnsupportedMetricError",
    "average_path_length",
    "avg_clustering",
    "bfs_balls",
    "counter_union_round",
    "dispersion_index",
    "distance_distribution",
    "estimate_intersection",
    "exact_average_path_length",
    "exact_distance_distribution",
    "gnm_random",
    "load_edge_list",
    "num_nodes_dist_from",
    "ring_lattice",
    "run_hyperball",
    "small_world_coefficient",
]
