"""
Partitioner And Protocol
Partition plans, sub-adjacency extraction, the message codec and the
master -> workers -> gather detection engine

Wire format (all integers little-endian):

    record  = tag:u8  length:u32  payload[length]

    tag 1 AssignTask        worker_id:i64 l:i64 n:i64 nnz:i64
                            pilot_indices:i64[l] local_indices:i64[n]
                            indptr:i64[l+n+1] indices:i64[nnz]
    tag 2 BroadcastCenters  centers:i64[K]
    tag 3 ReturnLabels      worker_id:i64 n:i64 l:i64 d:i64 k:i64
                            labels:i64[n] pilot_labels:i64[l]
                            degenerate:i64[d] left:f64[(l+n)*k]   (k = 0 when not kept)

Sub-adjacency values are implicit ones. The BroadcastCenters payload is
exactly K integers; master labels never cross the boundary.
"""

import struct
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import scipy.sparse as sp
from joblib import Parallel, delayed

from community.src.distributed.master import PilotSet, PseudoCenters, largest_remainder, master_cluster
from community.src.distributed.worker import WorkerResult, WorkerTask, worker_detect
from community.src.sbm.model import GroundTruth, SparseGraph
from community.utils.errors import InvalidPartitionError

ENGINES = ("sequential", "parallel")
MODES = ("even", "proportions")

TAG_ASSIGN = 1
TAG_BROADCAST = 2
TAG_RETURN = 3
HEADER = struct.Struct("<BI")
INT = np.dtype("<i8")
FLOAT = np.dtype("<f8")

RESULT_FORMAT = b"pilotnet-result/1"


# ============= PARTITION PLAN =============

@dataclass(frozen=True)
class PartitionPlan:
    """Pilot set plus M disjoint worker index sets covering the remaining nodes"""

    pilot: PilotSet
    worker_assignments: Tuple[np.ndarray, ...]
    mode: str = "even"
    proportions: Optional[np.ndarray] = field(default=None, repr=False)
    seed: int = 0

    @property
    def num_workers(self) -> int:
        return len(self.worker_assignments)

    def worker_sizes(self) -> List[int]:
        return [int(a.size) for a in self.worker_assignments]

    def validate(self, num_nodes: int) -> None:
        """Raise InvalidPartitionError unless pilots and workers partition 0..N-1"""
        parts = [self.pilot.indices, *self.worker_assignments]
        combined = np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)
        if combined.size != num_nodes or not np.array_equal(np.sort(combined), np.arange(num_nodes)):
            raise InvalidPartitionError(
                f"pilots and worker sets must cover {num_nodes} nodes exactly once"
            )


def plan_partition(
    num_nodes: int,
    pilot: PilotSet,
    num_workers: int,
    mode: str = "even",
    truth: Optional[GroundTruth] = None,
    proportions: Optional[np.ndarray] = None,
    seed: int = 0,
) -> PartitionPlan:
    """
    Distribute the non-pilot nodes over M workers.

    even: seeded shuffle split into M near-equal parts (sizes differ by <= 1).
    proportions: block k's available nodes go to worker m in share
        pi[m, k] / sum_m pi[m, k] (largest remainder), so worker m's block
        fractions follow row m of pi.

    Args:
        num_nodes: N
        pilot: Pilot set
        num_workers: M >= 1
        mode: 'even' or 'proportions'
        truth: Ground truth, required in proportions mode
        proportions: M x K matrix with rows summing to 1
        seed: Shuffle seed

    Returns:
        PartitionPlan
    """
    if num_workers < 1:
        raise ValueError(f"need at least one worker, got M={num_workers}")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")

    rng = np.random.default_rng(seed)
    rest = np.setdiff1d(np.arange(num_nodes, dtype=np.int64), pilot.indices)

    if mode == "even":
        parts = np.array_split(rng.permutation(rest), num_workers)
        assignments = tuple(np.sort(p) for p in parts)
        return PartitionPlan(pilot, assignments, mode, None, seed)

    if truth is None or proportions is None:
        raise InvalidPartitionError("proportions mode requires ground truth and a proportion matrix")
    pi = np.asarray(proportions, dtype=float)
    K = truth.num_blocks
    if pi.shape != (num_workers, K):
        raise InvalidPartitionError(f"proportions must be {num_workers}x{K}, got {pi.shape}")
    if np.any(pi < 0) or not np.allclose(pi.sum(axis=1), 1.0, atol=1e-9):
        raise InvalidPartitionError("proportion rows must be non-negative and sum to 1")

    buckets: List[List[np.ndarray]] = [[] for _ in range(num_workers)]
    for k in range(K):
        available = rng.permutation(rest[truth.labels[rest] == k])
        column = pi[:, k]
        if available.size and column.sum() <= 0:
            raise InvalidPartitionError(f"block {k} has {available.size} nodes but no worker takes it")
        if available.size == 0:
            continue
        counts = largest_remainder(column / column.sum() * available.size, available.size)
        for m, chunk in enumerate(np.split(available, np.cumsum(counts)[:-1])):
            buckets[m].append(chunk)

    assignments = tuple(
        np.sort(np.concatenate(b)) if b else np.empty(0, dtype=np.int64) for b in buckets
    )
    return PartitionPlan(pilot, assignments, mode, pi, seed)


def extract_subadjacency(graph: SparseGraph, plan: PartitionPlan, m: int) -> WorkerTask:
    """Rows: pilots then worker m's nodes; columns: pilots. Entries copied from A."""
    if not 0 <= m < plan.num_workers:
        raise ValueError(f"worker index {m} out of range for M={plan.num_workers}")
    pilots = plan.pilot.indices
    local = plan.worker_assignments[m]
    rows = np.concatenate([pilots, local])
    sub = sp.csr_matrix(graph.adjacency[rows][:, pilots])
    sub.sort_indices()
    return WorkerTask(worker_id=m, pilot_indices=pilots, local_indices=local, sub_adjacency=sub)


# ============= MESSAGES =============

@dataclass(frozen=True)
class AssignTask:
    task: WorkerTask


@dataclass(frozen=True)
class BroadcastCenters:
    centers: PseudoCenters


@dataclass(frozen=True)
class ReturnLabels:
    result: WorkerResult


Message = Union[AssignTask, BroadcastCenters, ReturnLabels]


def _ints(*arrays) -> bytes:
    return b"".join(np.asarray(a, dtype=INT).tobytes() for a in arrays)


class _Reader:
    """Sequential reader over a payload"""

    def __init__(self, payload: bytes):
        self.payload = payload
        self.offset = 0

    def ints(self, count: int) -> np.ndarray:
        end = self.offset + count * INT.itemsize
        if end > len(self.payload):
            raise ValueError("truncated message payload")
        out = np.frombuffer(self.payload, dtype=INT, count=count, offset=self.offset).astype(np.int64)
        self.offset = end
        return out

    def int(self) -> int:
        return int(self.ints(1)[0])

    def floats(self, count: int) -> np.ndarray:
        end = self.offset + count * FLOAT.itemsize
        if end > len(self.payload):
            raise ValueError("truncated message payload")
        out = np.frombuffer(self.payload, dtype=FLOAT, count=count, offset=self.offset).astype(np.float64)
        self.offset = end
        return out

    def finish(self) -> None:
        if self.offset != len(self.payload):
            raise ValueError(f"{len(self.payload) - self.offset} trailing bytes in message payload")


def encode_message(message: Message) -> bytes:
    """Serialize a message into one length-prefixed record"""
    if isinstance(message, AssignTask):
        task = message.task
        A = task.sub_adjacency
        payload = _ints(
            [task.worker_id, task.num_pilots, task.num_local, A.nnz],
            task.pilot_indices,
            task.local_indices,
            A.indptr,
            A.indices,
        )
        tag = TAG_ASSIGN
    elif isinstance(message, BroadcastCenters):
        payload = _ints(message.centers.pilot_local_indices)
        tag = TAG_BROADCAST
    elif isinstance(message, ReturnLabels):
        r = message.result
        left = r.left_singular
        k = 0 if left is None else left.shape[1]
        payload = _ints(
            [r.worker_id, r.labels.size, r.pilot_labels.size, r.degenerate_nodes.size, k],
            r.labels,
            r.pilot_labels,
            r.degenerate_nodes,
        )
        if left is not None:
            payload += np.ascontiguousarray(left, dtype=FLOAT).tobytes()
        tag = TAG_RETURN
    else:
        raise TypeError(f"cannot encode {type(message).__name__}")
    return HEADER.pack(tag, len(payload)) + payload


def decode_message(record: bytes) -> Message:
    """Parse one record produced by encode_message"""
    if len(record) < HEADER.size:
        raise ValueError("record shorter than its header")
    tag, length = HEADER.unpack_from(record)
    payload = record[HEADER.size:]
    if len(payload) != length:
        raise ValueError(f"record declares {length} payload bytes, found {len(payload)}")
    reader = _Reader(payload)

    if tag == TAG_ASSIGN:
        worker_id, l, n, nnz = reader.ints(4)
        pilots = reader.ints(int(l))
        local = reader.ints(int(n))
        indptr = reader.ints(int(l + n + 1))
        indices = reader.ints(int(nnz))
        reader.finish()
        A = sp.csr_matrix((np.ones(int(nnz)), indices, indptr), shape=(int(l + n), int(l)))
        return AssignTask(WorkerTask(int(worker_id), pilots, local, A))

    if tag == TAG_BROADCAST:
        centers = reader.ints(length // INT.itemsize)
        reader.finish()
        return BroadcastCenters(PseudoCenters(centers))

    if tag == TAG_RETURN:
        worker_id, n, l, d, k = reader.ints(5)
        labels = reader.ints(int(n))
        pilot_labels = reader.ints(int(l))
        degenerate = reader.ints(int(d))
        left = reader.floats(int((l + n) * k)).reshape(int(l + n), int(k)) if k else None
        reader.finish()
        return ReturnLabels(WorkerResult(int(worker_id), labels, degenerate, pilot_labels, left))

    raise ValueError(f"unknown message tag {tag}")


# ============= RESULT =============

@dataclass(frozen=True)
class ClusteringResult:
    """
    Output of one detection run.

    worker_of[i] is the worker that labelled node i, or -1 for pilots
    (labelled by the master). node_order is set when the graph was shuffled
    before detection: node i of this result is node node_order[i] of the
    unshuffled graph.
    """

    labels: np.ndarray
    num_blocks: int
    pilot_indices: np.ndarray
    pseudo_centers: np.ndarray
    worker_of: np.ndarray
    degenerate_nodes: np.ndarray
    pilot_agreement: np.ndarray
    broadcast_bytes: int
    seeds: Dict[str, int]
    timings: Dict[str, float]
    engine: str
    left_singular: Optional[Dict[int, np.ndarray]] = field(default=None, repr=False)
    node_order: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def num_nodes(self) -> int:
        return int(self.labels.size)

    @property
    def pseudo_center_nodes(self) -> np.ndarray:
        """Global node ids of the pseudo centers"""
        return self.pilot_indices[self.pseudo_centers]

    @property
    def total_compute(self) -> float:
        """master + broadcast + sum of worker compute + gather, in seconds"""
        t = self.timings
        workers = sum(v for key, v in t.items() if key.startswith("worker_"))
        return float(t.get("master", 0.0) + t.get("broadcast", 0.0) + workers + t.get("gather", 0.0))

    def canonical_bytes(self) -> bytes:
        """Deterministic serialization of everything except timings and engine name"""
        parts = [
            RESULT_FORMAT,
            _ints([self.num_blocks, self.labels.size, self.broadcast_bytes]),
            _ints(self.labels),
            _ints(self.pilot_indices),
            _ints(self.pseudo_centers),
            _ints(self.worker_of),
            _ints(self.degenerate_nodes),
            np.asarray(self.pilot_agreement, dtype=FLOAT).tobytes(),
        ]
        for key in sorted(self.seeds):
            parts.append(key.encode() + b"=" + str(int(self.seeds[key])).encode() + b";")
        if self.node_order is not None:
            parts.append(_ints(self.node_order))
        return b"".join(parts)


# ============= ENGINE =============

def _serve_worker(task_record: bytes, centers_record: bytes, K: int, keep_left: bool) -> Tuple[bytes, float]:
    """Worker side of the protocol: decode, detect, encode the reply"""
    start = time.perf_counter()
    task = decode_message(task_record).task
    centers = decode_message(centers_record).centers
    result = worker_detect(task, centers, K, keep_left_singular=keep_left)
    reply = encode_message(ReturnLabels(result))
    return reply, time.perf_counter() - start


def run_detection(
    graph: SparseGraph,
    K: int,
    plan: PartitionPlan,
    engine: str = "sequential",
    seed: int = 0,
    n_jobs: int = -1,
    keep_left_singular: bool = False,
) -> ClusteringResult:
    """
    Distributed community detection end to end.

    The master clusters the pilot graph and broadcasts the K pseudo-center
    positions once; every worker labels its own nodes; the master gathers the
    replies in worker order. Pilot labels come from the master. Any worker
    error aborts the run.

    Args:
        graph: Full graph (the engine slices it into worker tasks)
        K: Number of communities
        plan: Partition plan valid for graph
        engine: 'sequential' (in-process loop) or 'parallel' (joblib loky pool)
        seed: Master k-means seed
        n_jobs: Parallel pool size (joblib convention, -1 = all cores)
        keep_left_singular: Return each worker's embedding (for LEE)

    Returns:
        ClusteringResult
    """
    if engine not in ENGINES:
        raise ValueError(f"engine must be one of {ENGINES}, got {engine!r}")
    N = graph.num_nodes
    plan.validate(N)
    timings: Dict[str, float] = {}
    pilots = plan.pilot.indices
    l = pilots.size
    if l < K:
        raise ValueError(f"need at least K={K} pilots, got l={l}")

    # ============= STEP 1: MASTER =============
    start = time.perf_counter()
    A0 = graph.adjacency[pilots][:, pilots]
    _, centers = master_cluster(A0, K, seed)
    isolated_pilots = pilots[np.diff(A0.indptr) == 0]
    timings["master"] = time.perf_counter() - start

    # ============= STEP 2: BROADCAST =============
    start = time.perf_counter()
    centers_record = encode_message(BroadcastCenters(centers.broadcast()))
    broadcast_bytes = len(centers_record) - HEADER.size
    if broadcast_bytes != K * INT.itemsize:
        raise AssertionError(f"broadcast payload is {broadcast_bytes} bytes, expected {K * INT.itemsize}")
    timings["broadcast"] = time.perf_counter() - start

    start = time.perf_counter()
    task_records = [encode_message(AssignTask(extract_subadjacency(graph, plan, m))) for m in range(plan.num_workers)]
    timings["distribute"] = time.perf_counter() - start

    # ============= STEP 3: WORKERS =============
    if engine == "sequential":
        replies = [_serve_worker(record, centers_record, K, keep_left_singular) for record in task_records]
    else:
        jobs = min(plan.num_workers, n_jobs) if n_jobs > 0 else n_jobs
        replies = Parallel(n_jobs=jobs, backend="loky")(
            delayed(_serve_worker)(record, centers_record, K, keep_left_singular) for record in task_records
        )

    # ============= STEP 4: GATHER =============
    start = time.perf_counter()
    labels = np.full(N, -1, dtype=np.int64)
    worker_of = np.full(N, -1, dtype=np.int64)
    labels[pilots] = centers.master_labels
    degenerate = [isolated_pilots]
    agreement = np.zeros(plan.num_workers)
    left_singular = {} if keep_left_singular else None

    gathered = sorted(
        ((decode_message(reply).result, elapsed) for reply, elapsed in replies),
        key=lambda pair: pair[0].worker_id,
    )
    for result, elapsed in gathered:
        local = plan.worker_assignments[result.worker_id]
        labels[local] = result.labels
        worker_of[local] = result.worker_id
        degenerate.append(result.degenerate_nodes)
        agreement[result.worker_id] = float(np.mean(result.pilot_labels == centers.master_labels))
        if left_singular is not None:
            left_singular[result.worker_id] = result.left_singular
        timings[f"worker_{result.worker_id}"] = elapsed

    if np.any(labels < 0):
        raise InvalidPartitionError("gathered labels do not cover every node")
    timings["gather"] = time.perf_counter() - start

    return ClusteringResult(
        labels=labels,
        num_blocks=K,
        pilot_indices=pilots.copy(),
        pseudo_centers=centers.pilot_local_indices,
        worker_of=worker_of,
        degenerate_nodes=np.unique(np.concatenate(degenerate)).astype(np.int64),
        pilot_agreement=agreement,
        broadcast_bytes=broadcast_bytes,
        seeds={"detect": int(seed), "pilots": int(plan.pilot.seed), "plan": int(plan.seed)},
        timings=timings,
        engine=engine,
        left_singular=left_singular,
    )
