"""
Master Server
Pilot sampling, pilot-graph spectral clustering and pseudo-center selection
"""

import warnings
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from community.src.sbm.model import GroundTruth
from community.src.spectral.core import MatrixLike, full_spectral_clustering
from community.utils.errors import CenterCollisionWarning, EmptyClusterError, InvalidCentersError

POLICIES = ("stratified", "uniform")


@dataclass(frozen=True)
class PilotSet:
    """Sorted global indices of the pilot nodes"""

    indices: np.ndarray
    policy: str
    seed: int

    def __post_init__(self):
        indices = np.asarray(self.indices, dtype=np.int64)
        object.__setattr__(self, "indices", indices)
        if indices.size and np.any(np.diff(indices) <= 0):
            raise ValueError("pilot indices must be distinct and sorted")
        if self.policy not in POLICIES:
            raise ValueError(f"unknown pilot policy {self.policy!r}")

    @property
    def size(self) -> int:
        return int(self.indices.size)


@dataclass(frozen=True)
class PseudoCenters:
    """
    Positions (within the pilot set) of the K pseudo centers.

    master_labels stays on the master; a broadcast copy carries only the
    positions and has master_labels=None.
    """

    pilot_local_indices: np.ndarray
    master_labels: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "pilot_local_indices", np.asarray(self.pilot_local_indices, dtype=np.int64))

    @property
    def num_blocks(self) -> int:
        return int(self.pilot_local_indices.size)

    def broadcast(self) -> "PseudoCenters":
        return PseudoCenters(self.pilot_local_indices.copy())

    def validate(self, num_pilots: int) -> None:
        idx = self.pilot_local_indices
        if idx.ndim != 1 or idx.size == 0:
            raise InvalidCentersError("pseudo centers must be a non-empty vector")
        if np.any(idx < 0) or np.any(idx >= num_pilots):
            raise InvalidCentersError(f"pseudo centers {idx.tolist()} out of range for l={num_pilots}")
        if np.unique(idx).size != idx.size:
            raise InvalidCentersError(f"pseudo centers {idx.tolist()} are not distinct")


def largest_remainder(quotas: np.ndarray, total: int) -> np.ndarray:
    """
    Round non-negative quotas to integers summing to total.

    Floors first, then hands the remaining units to the largest fractional
    parts; ties go to the smaller index.
    """
    quotas = np.asarray(quotas, dtype=float)
    counts = np.floor(quotas).astype(np.int64)
    short = int(total - counts.sum())
    if short < 0 or short > quotas.size:
        raise ValueError(f"quotas {quotas.tolist()} cannot be rounded to total {total}")
    order = np.argsort(-(quotas - counts), kind="stable")
    counts[order[:short]] += 1
    return counts


def sample_pilots(
    num_nodes: int,
    num_pilots: int,
    policy: str,
    truth: Optional[GroundTruth],
    seed: int,
    num_blocks: Optional[int] = None,
) -> PilotSet:
    """
    Draw the pilot set.

    Args:
        num_nodes: N
        num_pilots: l, with K <= l <= N
        policy: 'stratified' (per-block counts proportional to block sizes,
            needs truth) or 'uniform' (simple random sample)
        truth: Ground truth, required for stratified sampling
        seed: RNG seed
        num_blocks: K, used for the l >= K check when truth is absent

    Returns:
        PilotSet
    """
    if policy not in POLICIES:
        raise ValueError(f"policy must be one of {POLICIES}, got {policy!r}")
    K = truth.num_blocks if truth is not None else num_blocks
    if K is not None and num_pilots < K:
        raise ValueError(f"need at least K={K} pilots, got l={num_pilots}")
    if not 1 <= num_pilots <= num_nodes:
        raise ValueError(f"l must lie in [1, N={num_nodes}], got {num_pilots}")

    rng = np.random.default_rng(seed)
    if policy == "uniform":
        indices = rng.choice(num_nodes, size=num_pilots, replace=False)
        return PilotSet(np.sort(indices), policy, seed)

    if truth is None:
        raise ValueError("stratified pilot sampling requires ground-truth labels")
    if truth.num_nodes != num_nodes:
        raise ValueError(f"truth covers {truth.num_nodes} nodes, expected {num_nodes}")
    block_sizes = truth.block_counts()
    counts = largest_remainder(num_pilots * block_sizes / num_nodes, num_pilots)
    chosen = []
    for k, count in enumerate(counts):
        members = np.flatnonzero(truth.labels == k)
        chosen.append(rng.choice(members, size=int(count), replace=False))
    return PilotSet(np.sort(np.concatenate(chosen)), policy, seed)


def select_pseudo_centers(
    embedding: np.ndarray,
    centers: np.ndarray,
    labels: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    Pick, for each k-means center, the nearest embedding row.

    With labels, only members of cluster k compete for center k, so the K
    positions are distinct and each belongs to the cluster it represents.
    Without labels all rows compete; a center whose nearest row is already
    claimed takes its nearest unclaimed row and a CenterCollisionWarning is
    emitted. Ties go to the smallest row index.

    Returns:
        Length-K vector of row positions
    """
    embedding = np.asarray(embedding, dtype=float)
    centers = np.asarray(centers, dtype=float)
    K = centers.shape[0]
    if embedding.shape[0] < K:
        raise ValueError(f"need at least {K} rows to pick {K} centers")
    distances = cdist(embedding, centers, metric="sqeuclidean")
    chosen = np.empty(K, dtype=np.int64)

    if labels is not None:
        labels = np.asarray(labels)
        for k in range(K):
            members = np.flatnonzero(labels == k)
            if members.size == 0:
                raise EmptyClusterError(f"cluster {k} has no members")
            chosen[k] = members[np.argmin(distances[members, k])]
        return chosen

    claimed = set()
    for k in range(K):
        ranking = np.lexsort((np.arange(embedding.shape[0]), distances[:, k]))
        pick = next(int(i) for i in ranking if int(i) not in claimed)
        if pick != int(ranking[0]):
            warnings.warn(
                f"center {k}: nearest row {int(ranking[0])} already claimed, using row {pick}",
                CenterCollisionWarning,
                stacklevel=2,
            )
        claimed.add(pick)
        chosen[k] = pick
    return chosen


def master_cluster(A0: MatrixLike, K: int, seed: int) -> Tuple[np.ndarray, PseudoCenters]:
    """
    Spectral clustering of the pilot graph and pseudo-center selection.

    Args:
        A0: l x l pilot adjacency
        K: Number of communities
        seed: k-means seed

    Returns:
        (pilot_eigvecs, PseudoCenters)

    Raises:
        RankDeficientError: the pilot graph cannot support K communities
    """
    clustering = full_spectral_clustering(A0, K, seed)
    vectors = clustering.embedding.vectors
    positions = select_pseudo_centers(vectors, clustering.centers, clustering.labels)
    centers = PseudoCenters(positions, clustering.labels)
    if not np.array_equal(clustering.labels[positions], np.arange(K)):
        raise InvalidCentersError(
            f"pseudo centers {positions.tolist()} carry labels {clustering.labels[positions].tolist()}"
        )
    return vectors, centers
