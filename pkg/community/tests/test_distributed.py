"""
Tests for the distributed engine
Master, worker, partition plans, the message codec and run_detection
"""

import dataclasses
import pickle

import numpy as np
import pytest
import scipy.sparse as sp

from community.src.distributed.master import (
    PilotSet,
    PseudoCenters,
    largest_remainder,
    master_cluster,
    sample_pilots,
    select_pseudo_centers,
)
from community.src.distributed.protocol import (
    HEADER,
    AssignTask,
    BroadcastCenters,
    PartitionPlan,
    ReturnLabels,
    decode_message,
    encode_message,
    extract_subadjacency,
    plan_partition,
    run_detection,
)
from community.src.distributed.worker import WorkerResult, WorkerTask, embed_population, worker_detect
from community.src.evaluation.metrics import misclustering_rate
from community.src.sbm.model import (
    GroundTruth,
    SparseGraph,
    make_connectivity,
    membership_matrix,
    unbalanced_proportions,
)
from community.tests.conftest import two_cliques
from community.utils.errors import (
    CenterCollisionWarning,
    EmptyClusterError,
    InvalidCentersError,
    InvalidPartitionError,
    RankDeficientError,
)


def strong_plan(graph, truth, num_pilots=120, num_workers=3, seed=0):
    pilot = sample_pilots(graph.num_nodes, num_pilots, "stratified", truth, seed)
    return plan_partition(graph.num_nodes, pilot, num_workers, seed=seed + 1)


class TestPilotSampling:
    """Test pilot selection"""

    def test_largest_remainder(self):
        assert largest_remainder(np.array([1.5, 1.5, 1.0]), 4).tolist() == [2, 1, 1]
        assert largest_remainder(np.array([0.2, 0.7, 0.1]), 1).tolist() == [0, 1, 0]

    def test_stratified_counts(self):
        """Per-block pilot counts follow block sizes"""
        truth = GroundTruth(np.repeat([0, 1, 2], [50, 30, 20]), 3)
        pilot = sample_pilots(100, 10, "stratified", truth, seed=3)
        assert pilot.size == 10
        assert np.bincount(truth.labels[pilot.indices]).tolist() == [5, 3, 2]
        assert np.all(np.diff(pilot.indices) > 0)

    def test_uniform_reproducible(self):
        first = sample_pilots(100, 15, "uniform", None, seed=9)
        second = sample_pilots(100, 15, "uniform", None, seed=9)
        assert np.array_equal(first.indices, second.indices)
        assert np.unique(first.indices).size == 15

    def test_too_few_pilots(self):
        with pytest.raises(ValueError):
            sample_pilots(100, 2, "uniform", None, seed=0, num_blocks=3)

    def test_stratified_needs_truth(self):
        with pytest.raises(ValueError):
            sample_pilots(100, 10, "stratified", None, seed=0)

    def test_pilot_set_rejects_unsorted(self):
        with pytest.raises(ValueError):
            PilotSet(np.array([3, 1]), "uniform", 0)


class TestPseudoCenters:
    """Test pseudo-center selection on the master"""

    def test_members_only(self):
        embedding = np.array([[0.0], [1.0], [5.0], [6.0]])
        centers = np.array([[0.4], [5.6]])
        chosen = select_pseudo_centers(embedding, centers, np.array([0, 0, 1, 1]))
        assert chosen.tolist() == [0, 3]

    def test_tie_goes_to_smallest_index(self):
        chosen = select_pseudo_centers(np.array([[0.0], [2.0]]), np.array([[1.0]]))
        assert chosen.tolist() == [0]

    def test_collision_warns(self):
        embedding = np.array([[0.0], [10.0]])
        centers = np.array([[0.0], [0.1]])
        with pytest.warns(CenterCollisionWarning):
            chosen = select_pseudo_centers(embedding, centers)
        assert chosen.tolist() == [0, 1]

    def test_validate(self):
        with pytest.raises(InvalidCentersError):
            PseudoCenters(np.array([0, 5])).validate(4)
        with pytest.raises(InvalidCentersError):
            PseudoCenters(np.array([1, 1])).validate(4)
        PseudoCenters(np.array([0, 3])).validate(4)

    def test_broadcast_drops_master_labels(self):
        centers = PseudoCenters(np.array([0, 2]), np.array([0, 0, 1]))
        assert centers.broadcast().master_labels is None

    def test_master_cluster(self, cliques):
        """Each pseudo center belongs to the cluster it represents"""
        vectors, centers = master_cluster(cliques.adjacency, 2, seed=0)
        assert vectors.shape == (10, 2)
        assert centers.master_labels[centers.pilot_local_indices].tolist() == [0, 1]
        assert np.unique(centers.master_labels[:5]).size == 1

    def test_center_in_wrong_cluster(self, cliques, monkeypatch):
        """Centers drawn from one cluster cannot represent both"""
        monkeypatch.setattr(
            "community.src.distributed.master.select_pseudo_centers",
            lambda vectors, centers, labels: np.array([0, 1]),
        )
        with pytest.raises(InvalidCentersError, match="carry labels"):
            master_cluster(cliques.adjacency, 2, seed=0)

    def test_empty_cluster(self):
        embedding = np.array([[0.0], [1.0], [2.0]])
        with pytest.raises(EmptyClusterError):
            select_pseudo_centers(embedding, np.array([[0.0], [2.0]]), np.array([0, 0, 0]))


class TestPartitionPlan:
    """Test partition planning"""

    def test_even_split(self, strong_sbm):
        _, graph, truth = strong_sbm
        plan = strong_plan(graph, truth, num_workers=7)
        plan.validate(graph.num_nodes)
        sizes = plan.worker_sizes()
        assert max(sizes) - min(sizes) <= 1
        assert sum(sizes) == graph.num_nodes - 120

    def test_even_reproducible(self, strong_sbm):
        _, graph, truth = strong_sbm
        first = strong_plan(graph, truth)
        second = strong_plan(graph, truth)
        for a, b in zip(first.worker_assignments, second.worker_assignments):
            assert np.array_equal(a, b)

    def test_proportions(self, strong_sbm):
        """Worker block fractions follow the rows of pi"""
        _, graph, truth = strong_sbm
        pilot = sample_pilots(graph.num_nodes, 60, "stratified", truth, seed=2)
        pi = unbalanced_proportions(3, 3, 0.9)
        plan = plan_partition(graph.num_nodes, pilot, 3, "proportions", truth, pi, seed=4)
        plan.validate(graph.num_nodes)
        for m, local in enumerate(plan.worker_assignments):
            fractions = np.bincount(truth.labels[local], minlength=3) / local.size
            assert np.allclose(fractions, pi[m], atol=0.01)

    def test_proportions_need_truth(self, strong_sbm):
        _, graph, truth = strong_sbm
        pilot = sample_pilots(graph.num_nodes, 60, "stratified", truth, seed=2)
        with pytest.raises(InvalidPartitionError):
            plan_partition(graph.num_nodes, pilot, 3, "proportions", None, unbalanced_proportions(3, 3, 0.5))

    def test_validate_detects_gaps(self):
        pilot = PilotSet(np.array([0, 1]), "uniform", 0)
        plan = PartitionPlan(pilot, (np.array([2]), np.array([4])))
        with pytest.raises(InvalidPartitionError):
            plan.validate(5)

    def test_subadjacency(self, strong_sbm):
        """Rows are pilots then local nodes, columns are pilots"""
        _, graph, truth = strong_sbm
        plan = strong_plan(graph, truth)
        task = extract_subadjacency(graph, plan, 1)
        task.validate()
        assert task.sub_adjacency.shape == (120 + plan.worker_sizes()[1], 120)
        p, q = plan.pilot.indices[3], plan.worker_assignments[1][2]
        assert task.sub_adjacency[120 + 2, 3] == graph.adjacency[q, p]


class TestMessages:
    """Test the wire codec"""

    def test_assign_task(self, strong_sbm):
        _, graph, truth = strong_sbm
        task = extract_subadjacency(graph, strong_plan(graph, truth), 0)
        decoded = decode_message(encode_message(AssignTask(task))).task
        assert decoded.worker_id == 0
        assert np.array_equal(decoded.pilot_indices, task.pilot_indices)
        assert np.array_equal(decoded.local_indices, task.local_indices)
        assert (decoded.sub_adjacency != task.sub_adjacency).nnz == 0

    def test_broadcast_is_k_integers(self):
        record = encode_message(BroadcastCenters(PseudoCenters(np.array([4, 0, 9]))))
        assert len(record) - HEADER.size == 3 * 8
        decoded = decode_message(record).centers
        assert decoded.pilot_local_indices.tolist() == [4, 0, 9]
        assert decoded.master_labels is None

    def test_return_labels_with_embedding(self, rng):
        left = rng.standard_normal((5, 2))
        result = WorkerResult(2, np.array([0, 1, 1]), np.array([17]), np.array([0, 1]), left)
        decoded = decode_message(encode_message(ReturnLabels(result))).result
        assert decoded.worker_id == 2
        assert decoded.labels.tolist() == [0, 1, 1]
        assert decoded.degenerate_nodes.tolist() == [17]
        assert np.array_equal(decoded.left_singular, left)

    def test_malformed_records(self):
        record = encode_message(BroadcastCenters(PseudoCenters(np.array([1, 2]))))
        with pytest.raises(ValueError):
            decode_message(record[:-3])
        with pytest.raises(ValueError):
            decode_message(HEADER.pack(9, 0))
        with pytest.raises(ValueError):
            decode_message(b"\x01")

    def test_unknown_message_type(self):
        with pytest.raises(TypeError):
            encode_message("not a message")


class TestWorker:
    """Test the worker computation"""

    def test_rank_deficient_carries_worker_id(self):
        """K_{3,3} pilot block has rank two"""
        sub = sp.csr_matrix(np.kron(np.array([[0.0, 1.0], [1.0, 0.0]]), np.ones((3, 3))))
        task = WorkerTask(7, np.arange(6), np.empty(0, dtype=np.int64), sub)
        with pytest.raises(RankDeficientError) as info:
            worker_detect(task, PseudoCenters(np.array([0, 1, 3])), 3)
        assert info.value.worker_id == 7
        restored = pickle.loads(pickle.dumps(info.value))
        assert restored.worker_id == 7
        assert "worker 7" in str(restored)

    def test_local_order_does_not_change_labels(self, strong_sbm):
        """Permuting the local rows permutes the labels the same way"""
        _, graph, truth = strong_sbm
        plan = strong_plan(graph, truth)
        task = extract_subadjacency(graph, plan, 0)
        _, centers = master_cluster(task.sub_adjacency[: task.num_pilots], 3, seed=2)
        baseline = worker_detect(task, centers.broadcast(), 3)

        order = np.random.default_rng(6).permutation(task.num_local)
        rows = np.concatenate([np.arange(task.num_pilots), task.num_pilots + order])
        shuffled = WorkerTask(
            task.worker_id, task.pilot_indices, task.local_indices[order], task.sub_adjacency[rows]
        )
        result = worker_detect(shuffled, centers.broadcast(), 3)
        assert np.array_equal(result.labels, baseline.labels[order])
        assert np.array_equal(result.pilot_labels, baseline.pilot_labels)

    def test_center_count_mismatch(self, cliques):
        task = WorkerTask(0, np.arange(10), np.empty(0, dtype=np.int64), cliques.adjacency)
        with pytest.raises(ValueError):
            worker_detect(task, PseudoCenters(np.array([0, 5])), 3)

    def test_task_validation(self, cliques):
        task = WorkerTask(0, np.arange(10), np.array([3]), cliques.adjacency)
        with pytest.raises(ValueError):
            task.validate()

    def test_population_embedding_rows(self):
        labels = np.repeat(np.arange(3), 20)
        theta = membership_matrix(labels, 3)
        U = embed_population(theta, theta[::4], make_connectivity(0.2, 0.5, 3))
        assert U.shape == (60, 3)
        for k in range(3):
            rows = U[labels == k]
            assert np.abs(rows - rows[0]).max() < 1e-10

    def test_population_rejects_singular(self):
        theta = membership_matrix(np.array([0, 1]), 2)
        with pytest.raises(RankDeficientError):
            embed_population(theta, theta, np.ones((2, 2)))


class TestRunDetection:
    """Test the end-to-end engine"""

    def test_planted_sbm(self, strong_sbm):
        _, graph, truth = strong_sbm
        plan = strong_plan(graph, truth)
        result = run_detection(graph, 3, plan, seed=5)
        rate, _ = misclustering_rate(result.labels, truth.labels, 3)
        assert rate <= 0.03
        assert result.broadcast_bytes == 3 * 8
        assert np.all(result.worker_of[plan.pilot.indices] == -1)
        assert np.all(result.worker_of[plan.worker_assignments[2]] == 2)
        assert np.all(result.pilot_agreement >= 0.9)
        assert {"master", "broadcast", "distribute", "gather", "worker_0", "worker_2"} <= set(result.timings)

    def test_engines_agree(self, strong_sbm):
        """Sequential and parallel runs serialize identically"""
        _, graph, truth = strong_sbm
        plan = strong_plan(graph, truth, num_workers=4)
        sequential = run_detection(graph, 3, plan, engine="sequential", seed=8)
        parallel = run_detection(graph, 3, plan, engine="parallel", seed=8, n_jobs=2)
        assert sequential.canonical_bytes() == parallel.canonical_bytes()
        assert parallel.engine == "parallel"

    def test_all_pilots_single_worker_matches_full_clustering(self, strong_sbm):
        """l = N and M = 1 reduces to whole-graph spectral clustering"""
        from community.src.spectral.core import full_spectral_clustering

        _, graph, _ = strong_sbm
        pilot = PilotSet(np.arange(graph.num_nodes), "uniform", 0)
        plan = plan_partition(graph.num_nodes, pilot, 1)
        result = run_detection(graph, 3, plan, seed=21)
        baseline = full_spectral_clustering(graph, 3, seed=21)
        assert np.array_equal(result.labels, baseline.labels)

    def test_zero_degree_nodes(self):
        """Local nodes with no pilot neighbour get label 0 and are flagged"""
        base = two_cliques(5)
        edges = base.edges()
        graph = SparseGraph.from_edges(12, np.append(edges[:, 0], 10), np.append(edges[:, 1], 11))
        pilot = PilotSet(np.arange(10), "uniform", 0)
        plan = plan_partition(12, pilot, 1)
        result = run_detection(graph, 2, plan, seed=0)
        assert result.labels[10] == 0 and result.labels[11] == 0
        assert result.degenerate_nodes.tolist() == [10, 11]
        assert result.labels[0] != result.labels[9]
        assert result.pilot_agreement[0] == 1.0

    def test_unknown_engine(self, strong_sbm):
        _, graph, truth = strong_sbm
        with pytest.raises(ValueError):
            run_detection(graph, 3, strong_plan(graph, truth), engine="spark")

    def test_total_compute_excludes_distribution(self, strong_sbm):
        _, graph, truth = strong_sbm
        result = run_detection(graph, 3, strong_plan(graph, truth))
        timings = {"master": 1.0, "broadcast": 0.5, "distribute": 9.0, "worker_0": 2.0, "worker_1": 3.0, "gather": 0.25}
        assert dataclasses.replace(result, timings=timings).total_compute == pytest.approx(6.75)
