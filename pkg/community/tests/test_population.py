"""
Population-level spectral identities
Exact SBM expectations checked against the embeddings the engine relies on
"""

import numpy as np
import pytest
from scipy.spatial.distance import pdist

from community.src.distributed.worker import embed_population
from community.src.sbm.model import make_connectivity, membership_matrix, population_embedding
from community.src.spectral.core import procrustes_align

N = 600


def block_layout(K):
    labels = np.repeat(np.arange(K), N // K)
    return labels, membership_matrix(labels, K), make_connectivity(0.2, 0.5, K)


def first_of_each_block(labels, K, fraction, skip=0):
    """Nodes skip..skip+fraction*s of every block"""
    s = N // K
    take = int(round(fraction * s))
    return np.concatenate([np.flatnonzero(labels == k)[skip:skip + take] for k in range(K)])


def block_rows(U, labels, K):
    return np.array([U[np.flatnonzero(labels == k)[0]] for k in range(K)])


@pytest.mark.parametrize("K", [2, 3, 4])
class TestPopulationIdentities:
    """Test exact identities of the population embeddings"""

    def test_one_row_per_block(self, K):
        labels, theta, B = block_layout(K)
        U = population_embedding(theta, B, K)
        for k in range(K):
            rows = U[labels == k]
            assert np.abs(rows - rows[0]).max() <= 1e-10
        assert pdist(block_rows(U, labels, K)).min() > 1e-3

    @pytest.mark.parametrize("fraction", [0.1, 0.5])
    def test_pilot_distances_scale(self, K, fraction):
        """Pilot-graph row distances are fraction^-1/2 times the full ones"""
        labels, theta, B = block_layout(K)
        U = population_embedding(theta, B, K)
        pilots = first_of_each_block(labels, K, fraction)
        U0 = population_embedding(theta[pilots], B, K)
        full = pdist(block_rows(U, labels, K))
        pilot = pdist(block_rows(U0, labels[pilots], K))
        assert np.allclose(pilot, full / np.sqrt(fraction), atol=1e-8)

    def test_worker_embedding_matches_scaled_full(self, K):
        """Balanced S_m gives r_m^-1/2 U_m up to rotation"""
        labels, theta, B = block_layout(K)
        U = population_embedding(theta, B, K)
        pilots = first_of_each_block(labels, K, 0.1)
        local = first_of_each_block(labels, K, 0.3, skip=int(round(0.1 * (N // K))))
        rows = np.concatenate([pilots, local])
        worker = embed_population(theta[rows], theta[pilots], B)
        for k in range(K):
            block = worker[labels[rows] == k]
            assert np.abs(block - block[0]).max() <= 1e-10
        r_m = rows.size / N
        _, residual = procrustes_align(worker, U[rows] / np.sqrt(r_m))
        assert residual <= 1e-8

    def test_unbalanced_worker_breaks_identity(self, K):
        labels, theta, B = block_layout(K)
        U = population_embedding(theta, B, K)
        pilots = first_of_each_block(labels, K, 0.1)
        extra = np.flatnonzero(labels == 0)[50:150]
        rows = np.concatenate([pilots, extra])
        worker = embed_population(theta[rows], theta[pilots], B)
        _, residual = procrustes_align(worker, U[rows] / np.sqrt(rows.size / N))
        assert residual > 1e-4
