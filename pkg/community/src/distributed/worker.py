"""
Worker Server
Rectangular Laplacian, Gram-trick SVD and one-pass nearest-center labelling
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.linalg import svd
from scipy.spatial.distance import cdist

from community.src.distributed.master import PseudoCenters
from community.src.sbm.model import FULL_RANK_TOL, population_adjacency
from community.src.spectral.core import gram_svd, laplacian_rect
from community.utils.errors import RankDeficientError


@dataclass(frozen=True)
class WorkerTask:
    """
    Everything worker m stores: links from S_m = pilots + local nodes to the pilots.

    Rows of sub_adjacency are the pilots (in pilot order) followed by the local
    nodes; columns are the pilots.
    """

    worker_id: int
    pilot_indices: np.ndarray
    local_indices: np.ndarray
    sub_adjacency: sp.csr_matrix = field(repr=False)

    @property
    def num_pilots(self) -> int:
        return int(len(self.pilot_indices))

    @property
    def num_local(self) -> int:
        return int(len(self.local_indices))

    def validate(self) -> None:
        l, n = self.num_pilots, self.num_local
        if self.sub_adjacency.shape != (l + n, l):
            raise ValueError(f"sub_adjacency shape {self.sub_adjacency.shape}, expected {(l + n, l)}")
        if np.intersect1d(self.pilot_indices, self.local_indices).size:
            raise ValueError("pilot and local index sets overlap")
        top = self.sub_adjacency[:l]
        if (top != top.T).nnz:
            raise ValueError("pilot block of sub_adjacency is not symmetric")


@dataclass(frozen=True)
class WorkerResult:
    """Labels for one worker's local nodes plus diagnostics"""

    worker_id: int
    labels: np.ndarray
    degenerate_nodes: np.ndarray
    pilot_labels: np.ndarray
    left_singular: Optional[np.ndarray] = field(default=None, repr=False)


def worker_detect(
    task: WorkerTask,
    centers: PseudoCenters,
    K: int,
    keep_left_singular: bool = False,
) -> WorkerResult:
    """
    Label the worker's local nodes by their nearest pseudo-center row.

    Each row i of the top-K left singular vectors U of the rectangular
    Laplacian gets argmin_k ||U_i - U_{i_k}||^2 (ties to the smallest k).
    No iterative clustering runs on the worker. Local nodes without any pilot
    neighbour have all-zero rows; they get label 0 and are reported in
    degenerate_nodes.

    Args:
        task: Worker task
        centers: Broadcast pseudo centers
        K: Number of communities
        keep_left_singular: Retain U on the result (needed for LEE)

    Returns:
        WorkerResult

    Raises:
        InvalidCentersError: a pseudo-center position is not a valid pilot row
        RankDeficientError: the worker's subgraph cannot support K communities
    """
    l = task.num_pilots
    centers.validate(l)
    if centers.num_blocks != K:
        raise ValueError(f"received {centers.num_blocks} pseudo centers, expected K={K}")

    L, zero_rows, _ = laplacian_rect(task.sub_adjacency)
    try:
        triple = gram_svd(L, K)
    except RankDeficientError as exc:
        raise RankDeficientError(exc.message, worker_id=task.worker_id) from exc

    U = triple.left
    distances = cdist(U, U[centers.pilot_local_indices], metric="sqeuclidean")
    assigned = np.argmin(distances, axis=1).astype(np.int64)
    assigned[zero_rows] = 0

    local_zero = zero_rows[zero_rows >= l] - l
    return WorkerResult(
        worker_id=task.worker_id,
        labels=assigned[l:],
        degenerate_nodes=np.asarray(task.local_indices, dtype=np.int64)[local_zero],
        pilot_labels=assigned[:l],
        left_singular=U if keep_left_singular else None,
    )


def embed_population(theta_sub: np.ndarray, theta_pilot: np.ndarray, connectivity: np.ndarray) -> np.ndarray:
    """
    Top-K left singular vectors of the population worker Laplacian.

    The population sub-adjacency is Theta_sub B Theta_pilot^T, normalized by its
    row and column sums. Rows coincide exactly for nodes in the same block.

    Args:
        theta_sub: n x K membership of S_m (pilots first)
        theta_pilot: l x K membership of the pilots
        connectivity: K x K matrix B

    Returns:
        n x K matrix

    Raises:
        RankDeficientError: B is singular
    """
    B = np.asarray(connectivity, dtype=float)
    K = B.shape[0]
    if np.linalg.svd(B, compute_uv=False).min() <= FULL_RANK_TOL:
        raise RankDeficientError("connectivity matrix is rank deficient")

    P = population_adjacency(theta_sub, theta_pilot, B)
    row_sums, col_sums = P.sum(axis=1), P.sum(axis=0)
    row_scale = np.zeros_like(row_sums)
    col_scale = np.zeros_like(col_sums)
    np.divide(1.0, np.sqrt(row_sums), out=row_scale, where=row_sums > 0)
    np.divide(1.0, np.sqrt(col_sums), out=col_scale, where=col_sums > 0)
    L = row_scale[:, None] * P * col_scale[None, :]

    U, _, _ = svd(L, full_matrices=False)
    return U[:, :K]
