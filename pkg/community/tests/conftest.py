"""
Shared fixtures for the PilotNet test suite
"""

import numpy as np
import pytest

from community.src.sbm.model import SbmParams, SparseGraph, sample_sbm


def two_cliques(size: int = 5) -> SparseGraph:
    """Two cliques of the given size joined by one bridge edge (size-1, size)"""
    rows, cols = [], []
    for offset in (0, size):
        for i in range(size):
            for j in range(i + 1, size):
                rows.append(offset + i)
                cols.append(offset + j)
    rows.append(size - 1)
    cols.append(size)
    return SparseGraph.from_edges(2 * size, rows, cols)


@pytest.fixture
def cliques():
    return two_cliques(5)


@pytest.fixture
def two_triangles():
    """Triangles {0,1,2} and {3,4,5} joined by the bridge 2-3"""
    return SparseGraph.from_edges(6, [0, 0, 1, 3, 3, 4, 2], [1, 2, 2, 4, 5, 5, 3])


@pytest.fixture(scope="session")
def strong_sbm():
    """Well-separated 3-block SBM: within 0.3, between 0.06"""
    params = SbmParams.balanced(600, 3, 0.3, 0.8)
    graph, truth = sample_sbm(params, 11)
    return params, graph, truth


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
