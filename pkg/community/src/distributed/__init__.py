"""
Distributed Detection Package
Master, worker and the message protocol between them
"""

from community.src.distributed.master import (
    PilotSet,
    PseudoCenters,
    master_cluster,
    sample_pilots,
    select_pseudo_centers,
)
from community.src.distributed.protocol import (
    AssignTask,
    BroadcastCenters,
    ClusteringResult,
    PartitionPlan,
    ReturnLabels,
    decode_message,
    encode_message,
    extract_subadjacency,
    plan_partition,
    run_detection,
)
from community.src.distributed.worker import WorkerResult, WorkerTask, embed_population, worker_detect

__all__ = [
    "AssignTask",
    "BroadcastCenters",
    "ClusteringResult",
    "PartitionPlan",
    "PilotSet",
    "PseudoCenters",
    "ReturnLabels",
    "WorkerResult",
    "WorkerTask",
    "decode_message",
    "embed_population",
    "encode_message",
    "extract_subadjacency",
    "master_cluster",
    "plan_partition",
    "run_detection",
    "sample_pilots",
    "select_pseudo_centers",
    "worker_detect",
]
