"""
Oracle comparisons
Gram-trick SVD against dense SVD and permutation matching against the assignment solver
"""

import numpy as np
from scipy.linalg import subspace_angles, svd
from scipy.optimize import linear_sum_assignment

from community.src.evaluation.metrics import misclustering_rate
from community.src.spectral.core import gram_svd


class TestGramSvdOracle:
    """Test gram_svd on random tall matrices"""

    def test_left_subspaces_match(self):
        rng = np.random.default_rng(2024)
        worst = 0.0
        for _ in range(500):
            l = int(rng.integers(2, 21))
            n = int(rng.integers(l, 51))
            K = int(rng.integers(1, l))
            X = rng.standard_normal((n, l))
            U, _, _ = svd(X, full_matrices=False)
            triple = gram_svd(X, K)
            worst = max(worst, float(np.max(subspace_angles(U[:, :K], triple.left))))
        assert worst <= 1e-7


class TestMatcherOracle:
    """Test brute-force matching against the Hungarian solver"""

    def test_rates_agree(self):
        rng = np.random.default_rng(7)
        for K in range(2, 6):
            for _ in range(200):
                truth = rng.integers(0, K, size=40)
                est = rng.integers(0, K, size=40)
                rate, perm = misclustering_rate(est, truth, K)
                C = np.zeros((K, K), dtype=np.int64)
                np.add.at(C, (est, truth), 1)
                rows, cols = linear_sum_assignment(C, maximize=True)
                assert rate == 1.0 - C[rows, cols].sum() / 40
                assert C[np.arange(K), perm].sum() == C[rows, cols].sum()
