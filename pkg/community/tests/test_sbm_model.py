"""
Tests for the stochastic block model
Parameters, sampling, proportions and population matrices
"""

import numpy as np
import pytest

from community.src.sbm.model import (
    GroundTruth,
    SbmParams,
    SparseGraph,
    _upper_pair,
    make_connectivity,
    membership_matrix,
    permute_nodes,
    population_embedding,
    sample_sbm,
    unbalanced_proportions,
)
from community.utils.errors import InvalidProportionsError


class TestSbmParams:
    """Test parameter validation"""

    def test_connectivity_values(self):
        """Diagonal nu, off-diagonal nu * (1 - lam)"""
        B = make_connectivity(0.2, 0.5, 3)
        assert np.allclose(np.diag(B), 0.2)
        assert np.isclose(B[0, 1], 0.1)
        assert np.allclose(B, B.T)

    def test_balanced_sizes(self):
        """Remainder goes to the first blocks"""
        params = SbmParams.balanced(10, 3, 0.2, 0.5)
        assert params.block_sizes == (4, 3, 3)
        assert params.labels().tolist() == [0, 0, 0, 0, 1, 1, 1, 2, 2, 2]
        assert np.isclose(params.b_min, 0.1)

    def test_rejects_singular_connectivity(self):
        """lam = 0 makes B rank one"""
        with pytest.raises(ValueError, match="full rank"):
            SbmParams.balanced(100, 2, 0.3, 0.0)

    def test_single_block_allowed(self):
        """K = 1 is a valid degenerate model"""
        params = SbmParams.balanced(20, 1, 0.3, 0.0)
        assert params.block_sizes == (20,)

    def test_rejects_bad_sizes(self):
        """Block sizes must sum to N"""
        with pytest.raises(ValueError):
            SbmParams(10, 2, (4, 5), make_connectivity(0.2, 0.5, 2))

    def test_rejects_out_of_range_probabilities(self):
        """Entries of B are probabilities"""
        with pytest.raises(ValueError):
            SbmParams(4, 2, (2, 2), np.array([[1.5, 0.1], [0.1, 0.5]]))


class TestSampling:
    """Test SBM sampling"""

    def test_reproducible(self):
        """Same seed gives the same graph"""
        params = SbmParams.balanced(200, 2, 0.3, 0.5)
        g1, _ = sample_sbm(params, 5)
        g2, _ = sample_sbm(params, 5)
        g3, _ = sample_sbm(params, 6)
        assert np.array_equal(g1.edges(), g2.edges())
        assert not np.array_equal(g1.edges(), g3.edges())

    def test_graph_is_simple(self):
        """Sampled adjacency is symmetric, 0/1, loop-free and sorted"""
        graph, truth = sample_sbm(SbmParams.balanced(150, 3, 0.4, 0.5), 1)
        graph.validate()
        assert truth.num_nodes == 150

    def test_identity_connectivity(self):
        """B = I gives disjoint cliques"""
        params = SbmParams.balanced(9, 3, 1.0, 1.0)
        graph, truth = sample_sbm(params, 0)
        assert graph.num_edges == 9
        edges = graph.edges()
        assert np.all(truth.labels[edges[:, 0]] == truth.labels[edges[:, 1]])

    def test_edge_density(self):
        """Within and between densities match B"""
        params = SbmParams.balanced(400, 2, 0.5, 0.5)
        graph, truth = sample_sbm(params, 3)
        edges = graph.edges()
        same = truth.labels[edges[:, 0]] == truth.labels[edges[:, 1]]
        within_pairs = 2 * 200 * 199 // 2
        between_pairs = 200 * 200
        assert abs(same.sum() / within_pairs - 0.5) < 0.015
        assert abs((~same).sum() / between_pairs - 0.25) < 0.015

    def test_uniform_density(self):
        """
        A constant B = 0.5 is rank one and rejected for K = 2; the single-block
        model with B = [[0.5]] samples the same graph law.
        """
        with pytest.raises(ValueError, match="full rank"):
            SbmParams(200, 2, (100, 100), np.full((2, 2), 0.5))
        params = SbmParams(200, 1, (200,), np.array([[0.5]]))
        pairs = 200 * 199 // 2
        densities = [sample_sbm(params, seed)[0].num_edges / pairs for seed in range(20)]
        assert abs(np.mean(densities) - 0.5) <= 0.03
        assert all(abs(d - 0.5) <= 0.03 for d in densities)

    def test_upper_pair_order(self):
        """Linear indices map to the strict upper triangle in row-major order"""
        i, j = _upper_pair(np.arange(10), 5)
        ti, tj = np.triu_indices(5, k=1)
        assert np.array_equal(i, ti)
        assert np.array_equal(j, tj)


class TestSparseGraph:
    """Test the graph container"""

    def test_from_edges_cleans_input(self):
        """Self-loops dropped, duplicates and reversed edges collapsed"""
        graph = SparseGraph.from_edges(4, [0, 1, 2, 2], [1, 0, 2, 3])
        assert graph.num_edges == 2
        assert graph.edges().tolist() == [[0, 1], [2, 3]]
        assert graph.degrees().tolist() == [1, 1, 1, 1]
        graph.validate()

    def test_subgraph(self, two_triangles):
        """Induced subgraph keeps the edges among the chosen nodes"""
        sub = two_triangles.subgraph(np.array([0, 1, 2]))
        assert sub.num_nodes == 3
        assert sub.num_edges == 3

    def test_csr_accessors(self, two_triangles):
        """row_offsets and col_indices are the CSR arrays"""
        assert two_triangles.row_offsets[-1] == 2 * two_triangles.num_edges
        assert two_triangles.col_indices[:2].tolist() == [1, 2]


class TestGroundTruth:
    """Test ground-truth labels"""

    def test_every_block_present(self):
        with pytest.raises(ValueError):
            GroundTruth(np.array([0, 0, 2]), 3)

    def test_block_counts(self):
        truth = GroundTruth(np.array([1, 0, 1, 1]), 2)
        assert truth.block_counts().tolist() == [1, 3]


class TestUnbalancedProportions:
    """Test the unbalanced assignment proportions"""

    def test_values(self):
        """First worker tilts towards low blocks, middle worker is uniform"""
        pi = unbalanced_proportions(3, 5, 0.6)
        assert np.allclose(pi.sum(axis=1), 1.0)
        assert np.allclose(pi[0], [1 / 3 + 0.1, 1 / 3, 1 / 3 - 0.1])
        assert np.allclose(pi[2], 1 / 3)
        assert np.allclose(pi[4], [1 / 3 - 0.1, 1 / 3, 1 / 3 + 0.1])

    def test_alpha_zero_is_uniform(self):
        assert np.allclose(unbalanced_proportions(4, 3, 0.0), 0.25)

    @pytest.mark.parametrize("alpha", [1.0, -0.1])
    def test_invalid_alpha(self, alpha):
        """Alpha outside [0, 1) is rejected"""
        with pytest.raises(InvalidProportionsError):
            unbalanced_proportions(3, 3, alpha)
        with pytest.raises(ValueError):
            unbalanced_proportions(3, 3, alpha)


class TestPopulation:
    """Test population-level helpers"""

    def test_membership_matrix(self):
        theta = membership_matrix(np.array([0, 2, 1, 2]), 3)
        assert theta.shape == (4, 3)
        assert theta.sum(axis=1).tolist() == [1, 1, 1, 1]
        assert theta[1, 2] == 1.0

    def test_permute_nodes(self, two_triangles):
        """Permutation relabels nodes consistently"""
        truth = GroundTruth(np.array([0, 0, 0, 1, 1, 1]), 2)
        graph, permuted, order = permute_nodes(two_triangles, truth, seed=4)
        assert np.array_equal(permuted.labels, truth.labels[order])
        assert graph.num_edges == two_triangles.num_edges
        original = two_triangles.adjacency.toarray()
        assert np.array_equal(graph.adjacency.toarray(), original[order][:, order])

    def test_embedding_constant_on_blocks(self):
        """Population eigenvectors have one row per block"""
        labels = np.repeat(np.arange(3), 10)
        U = population_embedding(membership_matrix(labels, 3), make_connectivity(0.5, 0.5, 3), 3)
        for k in range(3):
            rows = U[labels == k]
            assert np.abs(rows - rows[0]).max() < 1e-10
        assert np.linalg.norm(U[0] - U[10]) > 1e-3
