"""
Stochastic Block Model Package
Benchmark graph generators and population matrices
"""

from community.src.sbm.model import (
    GroundTruth,
    SbmParams,
    SparseGraph,
    make_connectivity,
    membership_matrix,
    permute_nodes,
    population_adjacency,
    population_embedding,
    sample_sbm,
    unbalanced_proportions,
)

__all__ = [
    "GroundTruth",
    "SbmParams",
    "SparseGraph",
    "make_connectivity",
    "membership_matrix",
    "permute_nodes",
    "population_adjacency",
    "population_embedding",
    "sample_sbm",
    "unbalanced_proportions",
]
