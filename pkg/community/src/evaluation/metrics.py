"""
Evaluation Metrics
Mis-clustering rate, log-estimation error, relative density and unbalanced effect
"""

import warnings
from dataclasses import dataclass, field
from itertools import permutations
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from community.src.distributed.protocol import ClusteringResult, PartitionPlan
from community.src.distributed.worker import embed_population
from community.src.sbm.model import GroundTruth, SparseGraph, membership_matrix
from community.src.spectral.core import procrustes_align
from community.utils.errors import DegenerateDensityError, ExactEmbeddingWarning

# Largest K matched by exhaustive permutation search
BRUTE_FORCE_MAX_K = 8

# Procrustes residual at or below this (relative to ||population||_F) counts as exact
EXACT_RESIDUAL_ULPS = 64

REPORT_COLUMNS = [
    "misclustering_rate",
    "pilot_rate",
    "lee",
    "red",
    "alpha_max",
    "per_worker_rates",
    "alpha",
    "matching_permutation",
]


@dataclass
class EvalReport:
    """Evaluation of one detection run; rate fields are None when no truth was given"""

    misclustering_rate: Optional[float]
    per_worker_rates: np.ndarray
    alpha: np.ndarray
    matching_permutation: np.ndarray
    lee: Optional[float] = None
    red: Optional[float] = None
    pilot_rate: Optional[float] = None
    lee_per_worker: List[float] = field(default_factory=list)

    def to_row(self) -> Dict[str, Any]:
        """Flat CSV row in REPORT_COLUMNS order; vectors are ';'-joined"""

        def joined(values) -> str:
            return ";".join(f"{v:.10g}" if isinstance(v, float) else str(v) for v in np.asarray(values).tolist())

        return {
            "misclustering_rate": self.misclustering_rate,
            "pilot_rate": self.pilot_rate,
            "lee": self.lee,
            "red": self.red,
            "alpha_max": float(np.max(self.alpha)) if np.size(self.alpha) else None,
            "per_worker_rates": joined(self.per_worker_rates),
            "alpha": joined(self.alpha),
            "matching_permutation": joined(self.matching_permutation),
        }


def _confusion(est: np.ndarray, truth: np.ndarray, K: int) -> np.ndarray:
    """C[a, b] = #{i : est_i = a, truth_i = b}"""
    C = np.zeros((K, K), dtype=np.int64)
    np.add.at(C, (est, truth), 1)
    return C


def misclustering_rate(est: Sequence[int], truth: Sequence[int], K: int) -> Tuple[float, np.ndarray]:
    """
    Fraction of mislabelled nodes under the best label permutation.

    Exhaustive search over all K! permutations for K <= 8 (first maximizer in
    lexicographic order), Hungarian assignment on the confusion matrix above.

    Args:
        est: Estimated labels in 0..K-1
        truth: True labels in 0..K-1
        K: Number of labels

    Returns:
        (rate, permutation) where permutation[a] is the true label matched to
        estimated label a
    """
    est = np.asarray(est, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    if est.shape != truth.shape:
        raise ValueError(f"label vectors differ in length: {est.size} vs {truth.size}")
    if est.size == 0:
        raise ValueError("label vectors are empty")
    for name, labels in (("est", est), ("truth", truth)):
        if labels.min() < 0 or labels.max() >= K:
            raise ValueError(f"{name} labels must lie in 0..{K - 1}")

    C = _confusion(est, truth, K)
    if K <= BRUTE_FORCE_MAX_K:
        candidates = np.array(list(permutations(range(K))), dtype=np.int64)
        scores = C[np.arange(K), candidates].sum(axis=1)
        permutation = candidates[int(np.argmax(scores))]
    else:
        rows, cols = linear_sum_assignment(C, maximize=True)
        permutation = cols[np.argsort(rows)].astype(np.int64)

    matched = int(C[np.arange(K), permutation].sum())
    return 1.0 - matched / est.size, permutation


def lee(estimated: np.ndarray, population: np.ndarray) -> float:
    """
    Log-estimation error: natural log of min_Q ||estimated - population Q||_F.

    Returns -inf (with an ExactEmbeddingWarning) when the aligned residual is
    zero up to rounding.
    """
    estimated = np.asarray(estimated, dtype=float)
    population = np.asarray(population, dtype=float)
    _, residual = procrustes_align(estimated, population)
    floor = EXACT_RESIDUAL_ULPS * np.finfo(float).eps * max(1.0, float(np.linalg.norm(population)))
    if np.array_equal(estimated, population) or residual <= floor:
        warnings.warn("embedding matches population exactly; LEE is -inf", ExactEmbeddingWarning, stacklevel=2)
        return float("-inf")
    return float(np.log(residual))


def average_lee(values: Sequence[float]) -> float:
    """Mean of per-worker LEE values (-inf if any worker is exact)"""
    if len(values) == 0:
        raise ValueError("no LEE values to average")
    return float(np.mean(values))


def relative_density(graph: SparseGraph, labels: Sequence[int]) -> float:
    """
    Between-community edge density over within-community edge density.

    Densities count unordered pairs i < j.

    Raises:
        DegenerateDensityError: fewer than two non-empty clusters, no
            within-cluster pairs, or zero within-cluster density
    """
    labels = np.asarray(labels, dtype=np.int64)
    N = graph.num_nodes
    if labels.size != N:
        raise ValueError(f"expected {N} labels, got {labels.size}")

    sizes = np.bincount(labels)
    sizes = sizes[sizes > 0]
    if sizes.size < 2:
        raise DegenerateDensityError("relative density needs at least two non-empty clusters")
    within_pairs = int(np.sum(sizes * (sizes - 1) // 2))
    between_pairs = N * (N - 1) // 2 - within_pairs
    if within_pairs == 0:
        raise DegenerateDensityError("no within-cluster pairs")

    edges = graph.edges()
    same = labels[edges[:, 0]] == labels[edges[:, 1]]
    within_edges = int(np.count_nonzero(same))
    between_edges = int(same.size - within_edges)
    if within_edges == 0:
        raise DegenerateDensityError("within-cluster density is zero")

    return (between_edges / between_pairs) / (within_edges / within_pairs)


def unbalance_alpha(plan: PartitionPlan, truth: GroundTruth) -> np.ndarray:
    """
    Unbalanced effect per worker: max_k |nbar_mk / nbar_m - m_k / N| over S_m = pilots + worker m.
    """
    global_share = truth.block_counts() / truth.num_nodes
    pilot_counts = np.bincount(truth.labels[plan.pilot.indices], minlength=truth.num_blocks)
    alpha = np.zeros(plan.num_workers)
    for m, local in enumerate(plan.worker_assignments):
        counts = pilot_counts + np.bincount(truth.labels[local], minlength=truth.num_blocks)
        alpha[m] = np.max(np.abs(counts / counts.sum() - global_share))
    return alpha


def evaluate_detection(
    result: ClusteringResult,
    truth: Optional[GroundTruth] = None,
    graph: Optional[SparseGraph] = None,
    plan: Optional[PartitionPlan] = None,
    connectivity: Optional[np.ndarray] = None,
) -> EvalReport:
    """
    Evaluate a detection run with whatever inputs are available.

    Args:
        result: Detection output
        truth: Ground truth (rates, alpha, LEE)
        graph: Graph the run used (RED)
        plan: Partition plan of the run (per-worker rates, alpha, LEE)
        connectivity: SBM matrix B; with truth, plan and retained embeddings
            enables LEE against the population embedding

    Returns:
        EvalReport
    """
    K = result.num_blocks
    rate = pilot_rate = None
    permutation = np.arange(K)
    num_workers = plan.num_workers if plan is not None else 0
    per_worker = np.zeros(num_workers)
    alpha = np.zeros(num_workers)

    if truth is not None:
        rate, permutation = misclustering_rate(result.labels, truth.labels, K)
        matched = permutation[result.labels]
        wrong = matched != truth.labels
        pilot_rate = float(np.mean(wrong[result.pilot_indices]))
        if plan is not None:
            for m, local in enumerate(plan.worker_assignments):
                per_worker[m] = float(np.mean(wrong[local])) if local.size else 0.0
            alpha = unbalance_alpha(plan, truth)

    red = None
    if graph is not None:
        try:
            red = relative_density(graph, result.labels)
        except DegenerateDensityError:
            red = None

    lee_values: List[float] = []
    average = None
    if (
        truth is not None
        and plan is not None
        and connectivity is not None
        and result.left_singular is not None
    ):
        theta = membership_matrix(truth.labels, truth.num_blocks)
        theta_pilot = theta[plan.pilot.indices]
        for m, local in enumerate(plan.worker_assignments):
            rows = np.concatenate([plan.pilot.indices, local])
            population = embed_population(theta[rows], theta_pilot, connectivity)
            lee_values.append(lee(result.left_singular[m], population))
        average = average_lee(lee_values)

    return EvalReport(
        misclustering_rate=rate,
        per_worker_rates=per_worker,
        alpha=alpha,
        matching_permutation=np.asarray(permutation, dtype=np.int64),
        lee=average,
        red=red,
        pilot_rate=pilot_rate,
        lee_per_worker=lee_values,
    )
