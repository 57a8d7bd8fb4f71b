"""
Stochastic Block Model
Parameters, sampling and population-level matrices for SBM benchmarks

Labels and node indices are 0-based. Nodes are laid out contiguously by block:
the first block_sizes[0] indices belong to block 0, the next block_sizes[1] to
block 1, and so on.
"""

from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh

from community.utils.errors import InvalidProportionsError

# Smallest singular value B must exceed to count as full rank
FULL_RANK_TOL = 1e-12


# ============= DOMAIN TYPES =============

@dataclass(frozen=True)
class SbmParams:
    """Generative parameters of a K-block SBM"""

    num_nodes: int
    num_blocks: int
    block_sizes: Tuple[int, ...]
    connectivity: np.ndarray

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.block_sizes)
        B = np.asarray(self.connectivity, dtype=float)
        object.__setattr__(self, "block_sizes", sizes)
        object.__setattr__(self, "connectivity", B)

        if self.num_blocks < 1 or self.num_nodes < 1:
            raise ValueError("num_nodes and num_blocks must be positive")
        if len(sizes) != self.num_blocks or any(s < 1 for s in sizes):
            raise ValueError(f"block_sizes must be {self.num_blocks} positive integers, got {sizes}")
        if sum(sizes) != self.num_nodes:
            raise ValueError(f"block sizes sum to {sum(sizes)}, expected N={self.num_nodes}")
        if B.shape != (self.num_blocks, self.num_blocks):
            raise ValueError(f"connectivity must be {self.num_blocks}x{self.num_blocks}, got {B.shape}")
        if not np.allclose(B, B.T, atol=0.0):
            raise ValueError("connectivity matrix must be symmetric")
        if B.min() < 0.0 or B.max() > 1.0:
            raise ValueError("connectivity entries must lie in [0, 1]")
        if self.sigma_min <= FULL_RANK_TOL:
            raise ValueError(f"connectivity matrix must have full rank (sigma_min={self.sigma_min:.3e})")

    @classmethod
    def balanced(cls, num_nodes: int, num_blocks: int, nu: float, lam: float) -> "SbmParams":
        """Equal-size blocks (remainder spread over the first blocks) with B from make_connectivity"""
        base, extra = divmod(num_nodes, num_blocks)
        sizes = tuple(base + (1 if k < extra else 0) for k in range(num_blocks))
        return cls(num_nodes, num_blocks, sizes, make_connectivity(nu, lam, num_blocks))

    @property
    def sigma_min(self) -> float:
        return float(np.linalg.svd(self.connectivity, compute_uv=False).min())

    @property
    def b_min(self) -> float:
        return float(self.connectivity.min())

    def labels(self) -> np.ndarray:
        return np.repeat(np.arange(self.num_blocks), self.block_sizes)


@dataclass(frozen=True)
class GroundTruth:
    """Block index per node; label_map records original names when labels were compacted"""

    labels: np.ndarray
    num_blocks: int
    label_map: Optional[Dict[object, int]] = None

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "labels", labels)
        if labels.ndim != 1:
            raise ValueError("labels must be a vector")
        present = np.unique(labels)
        if not np.array_equal(present, np.arange(self.num_blocks)):
            raise ValueError(f"every block in 0..{self.num_blocks - 1} must appear; found {present.tolist()}")

    @property
    def num_nodes(self) -> int:
        return int(self.labels.size)

    def block_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.num_blocks)


@dataclass(frozen=True)
class SparseGraph:
    """
    Undirected simple graph as a symmetric 0/1 CSR adjacency with zero diagonal.

    row_offsets/col_indices are the CSR indptr/indices arrays; column indices
    are kept sorted within each row.
    """

    adjacency: sp.csr_matrix = field(repr=False)

    def __post_init__(self):
        A = sp.csr_matrix(self.adjacency, dtype=np.float64)
        A.sort_indices()
        object.__setattr__(self, "adjacency", A)

    @classmethod
    def from_edges(cls, num_nodes: int, rows, cols) -> "SparseGraph":
        """Build from (possibly duplicated, one-directional) endpoint arrays; self-loops are dropped"""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        keep = rows != cols
        rows, cols = rows[keep], cols[keep]
        both_r = np.concatenate([rows, cols])
        both_c = np.concatenate([cols, rows])
        A = sp.csr_matrix(
            (np.ones(both_r.size), (both_r, both_c)), shape=(num_nodes, num_nodes)
        )
        # duplicates were summed by the COO conversion
        A.data[:] = 1.0
        return cls(A)

    @property
    def num_nodes(self) -> int:
        return int(self.adjacency.shape[0])

    @property
    def row_offsets(self) -> np.ndarray:
        return self.adjacency.indptr

    @property
    def col_indices(self) -> np.ndarray:
        return self.adjacency.indices

    @property
    def num_edges(self) -> int:
        return int(self.adjacency.nnz // 2)

    def degrees(self) -> np.ndarray:
        return np.diff(self.adjacency.indptr).astype(np.int64)

    def edges(self) -> np.ndarray:
        """Unordered edges as an (E, 2) array with u < v, sorted"""
        upper = sp.triu(self.adjacency, k=1, format="coo")
        order = np.lexsort((upper.col, upper.row))
        return np.column_stack([upper.row[order], upper.col[order]]).astype(np.int64)

    def subgraph(self, nodes: np.ndarray) -> "SparseGraph":
        nodes = np.asarray(nodes, dtype=np.int64)
        return SparseGraph(self.adjacency[nodes][:, nodes])

    def validate(self) -> None:
        """Raise ValueError if any structural invariant is violated"""
        A = self.adjacency
        if A.shape[0] != A.shape[1]:
            raise ValueError("adjacency must be square")
        if A.diagonal().any():
            raise ValueError("self-loops present")
        if A.nnz and not np.all(A.data == 1.0):
            raise ValueError("adjacency entries must be 0/1")
        if (A != A.T).nnz:
            raise ValueError("adjacency is not symmetric")
        for i in range(A.shape[0]):
            row = A.indices[A.indptr[i]:A.indptr[i + 1]]
            if row.size > 1 and np.any(np.diff(row) <= 0):
                raise ValueError(f"column indices of row {i} are not strictly sorted")


# ============= GENERATORS =============

def make_connectivity(nu: float, lam: float, num_blocks: int) -> np.ndarray:
    """
    Parametric connectivity nu * (lam * I + (1 - lam) * 1 1^T).

    nu sets the connection intensity, lam the divergence between within- and
    between-block probabilities (diagonal nu, off-diagonal nu * (1 - lam)).
    """
    if num_blocks < 1:
        raise ValueError("num_blocks must be >= 1")
    K = num_blocks
    return nu * (lam * np.eye(K) + (1.0 - lam) * np.ones((K, K)))


def _upper_pair(index: np.ndarray, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Map linear indices of the strict upper triangle of an n x n matrix (row-major) to (i, j)"""
    index = index.astype(np.int64)
    total = n * (n - 1) // 2
    i = n - 2 - np.floor(np.sqrt(-8.0 * index + 4.0 * n * (n - 1) - 7.0) / 2.0 - 0.5).astype(np.int64)
    j = index + i + 1 - total + (n - i) * (n - i - 1) // 2
    return i, j


def sample_sbm(params: SbmParams, seed: int) -> Tuple[SparseGraph, GroundTruth]:
    """
    Draw a graph from the SBM.

    Every unordered pair {i, j} of distinct nodes carries an edge independently
    with probability B[g_i, g_j]. Edges are drawn per block pair (k <= l) in
    row-major block order: the edge count is Binomial(pairs(k, l), B[k, l]) and
    the edges are a uniform sample of that many distinct pairs. This costs
    O(#edges) rather than O(N^2) and is reproducible given the seed.

    Args:
        params: SBM parameters
        seed: RNG seed

    Returns:
        (graph, ground_truth)
    """
    rng = np.random.default_rng(seed)
    sizes = np.array(params.block_sizes, dtype=np.int64)
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    B = params.connectivity

    rows, cols = [], []
    for k in range(params.num_blocks):
        for l in range(k, params.num_blocks):
            p = float(B[k, l])
            if k == l:
                n_pairs = int(sizes[k] * (sizes[k] - 1) // 2)
            else:
                n_pairs = int(sizes[k] * sizes[l])
            if n_pairs == 0 or p <= 0.0:
                continue
            if p >= 1.0:
                picked = np.arange(n_pairs, dtype=np.int64)
            else:
                count = int(rng.binomial(n_pairs, p))
                picked = np.sort(rng.choice(n_pairs, size=count, replace=False))
            if k == l:
                i, j = _upper_pair(picked, int(sizes[k]))
                rows.append(offsets[k] + i)
                cols.append(offsets[k] + j)
            else:
                rows.append(offsets[k] + picked // sizes[l])
                cols.append(offsets[l] + picked % sizes[l])

    if rows:
        u, v = np.concatenate(rows), np.concatenate(cols)
    else:
        u = v = np.empty(0, dtype=np.int64)
    graph = SparseGraph.from_edges(params.num_nodes, u, v)
    truth = GroundTruth(params.labels(), params.num_blocks)
    return graph, truth


def unbalanced_proportions(num_blocks: int, num_workers: int, alpha: float) -> np.ndarray:
    """
    Per-worker block proportions for the unbalanced-assignment experiments.

    pi[m, k] = 1/K + (k - (K+1)/2) * sign(m - (M+1)/2) * alpha / (K (K-1))
    evaluated with 1-based k and m; sign(0) = 0, so the middle worker of an
    odd M gets uniform proportions. Rows always sum to 1.

    Raises:
        InvalidProportionsError: if alpha yields an entry outside (0, 1)
    """
    if num_blocks < 1 or num_workers < 1:
        raise ValueError("num_blocks and num_workers must be positive")
    if not 0.0 <= alpha < 1.0:
        raise InvalidProportionsError(f"alpha must lie in [0, 1), got {alpha}")
    K, M = num_blocks, num_workers
    if K == 1:
        return np.ones((M, 1))
    k = np.arange(1, K + 1, dtype=float)
    m = np.arange(1, M + 1, dtype=float)
    shift = np.outer(np.sign(m - (M + 1) / 2.0), k - (K + 1) / 2.0)
    pi = 1.0 / K + shift * alpha / (K * (K - 1))
    if np.any(pi <= 0.0) or np.any(pi >= 1.0):
        raise InvalidProportionsError(
            f"alpha={alpha} gives proportions outside (0, 1) for K={K}, M={M}"
        )
    return pi


def permute_nodes(graph: SparseGraph, truth: GroundTruth, seed: int):
    """
    Relabel nodes by a seeded random permutation.

    Returns:
        (graph, truth, order) where new node i is old node order[i]
    """
    order = np.random.default_rng(seed).permutation(graph.num_nodes)
    A = graph.adjacency[order][:, order]
    return SparseGraph(A), GroundTruth(truth.labels[order], truth.num_blocks, truth.label_map), order


# ============= POPULATION MATRICES =============

def membership_matrix(labels: np.ndarray, num_blocks: int) -> np.ndarray:
    """0/1 membership matrix Theta (N x K)"""
    labels = np.asarray(labels, dtype=np.int64)
    theta = np.zeros((labels.size, num_blocks))
    theta[np.arange(labels.size), labels] = 1.0
    return theta


def population_adjacency(theta_rows: np.ndarray, theta_cols: np.ndarray, connectivity: np.ndarray) -> np.ndarray:
    """Expected adjacency Theta_r B Theta_c^T (diagonal included)"""
    return theta_rows @ connectivity @ theta_cols.T


def population_embedding(theta: np.ndarray, connectivity: np.ndarray, num_blocks: int) -> np.ndarray:
    """
    Top-K eigenvectors (by |eigenvalue|) of the population Laplacian D^-1/2 A D^-1/2
    built from Theta B Theta^T. Nodes with equal blocks get identical rows.
    """
    P = population_adjacency(theta, theta, connectivity)
    degrees = P.sum(axis=1)
    inv_sqrt = np.zeros_like(degrees)
    np.divide(1.0, np.sqrt(degrees), out=inv_sqrt, where=degrees > 0)
    L = inv_sqrt[:, None] * P * inv_sqrt[None, :]
    values, vectors = eigh(L)
    order = np.lexsort((-values, -np.abs(values)))[:num_blocks]
    return vectors[:, order]
