"""Bond percolation laboratory for the hypercube and related transitive graphs."""

from ._backend import BACKEND
from .errors import (
    DivergenceError,
    DomainError,
    PercLabError,
    PrecisionError,
    ResourceError,
)
from .graphs import GraphSpec, canonical_edge, neighbors
from .percolation import ClusterReport, PercolationSample, edge_open, explore_cluster

__all__ = [
    "BACKEND",
    "ClusterReport",
    "DivergenceError",
    "DomainError",
    "GraphSpec",
    "PercLabError",
    "PercolationSample",
    "PrecisionError",
    "ResourceError",
    "canonical_edge",
    "edge_open",
    "explore_cluster",
    "neighbors",
]

__version__ = "0.1.0"
