"""
Detection Pipeline
One-call graph -> pilots -> plan -> distributed detection, with manifest replay
"""

import dataclasses
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from community.src.distributed.master import sample_pilots
from community.src.distributed.protocol import ClusteringResult, PartitionPlan, plan_partition, run_detection
from community.src.sbm.model import (
    GroundTruth,
    SbmParams,
    SparseGraph,
    permute_nodes,
    sample_sbm,
    unbalanced_proportions,
)
from community.utils.graph_io import load_edge_list, load_labels
from community.utils.seeds import stage_seeds


@dataclass(frozen=True)
class RunSpec:
    """
    Everything needed to reproduce one detection run.

    source='sbm' samples a balanced SBM (num_nodes, nu, lam); source='file'
    loads edge_list (and labels, when given); source='inline' marks a graph
    handed in by the caller, which build_graph cannot rebuild. All
    randomness derives from seed and path.
    """

    num_blocks: int
    num_pilots: int
    num_workers: int
    seed: int
    path: Tuple[int, ...] = ()
    policy: str = "stratified"
    mode: str = "even"
    alpha: float = 0.0
    engine: str = "sequential"
    shuffle: bool = False
    keep_left_singular: bool = False
    source: str = "sbm"
    num_nodes: Optional[int] = None
    nu: Optional[float] = None
    lam: Optional[float] = None
    edge_list: Optional[str] = None
    labels: Optional[str] = None
    index_base: int = 0

    def to_manifest(self) -> Dict[str, str]:
        entries = {}
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            if f.name == "path":
                value = ",".join(str(p) for p in value)
            entries[f"run.{f.name}"] = str(value)
        return entries

    @classmethod
    def from_manifest(cls, manifest: Dict[str, str]) -> "RunSpec":
        names = {f.name for f in dataclasses.fields(cls)}
        values = {}
        for key, raw in manifest.items():
            if not key.startswith("run."):
                continue
            name = key[len("run."):]
            if name not in names:
                raise ValueError(f"unknown manifest key {key}")
            if name == "path":
                values[name] = tuple(int(p) for p in raw.split(",") if p)
            elif name in ("shuffle", "keep_left_singular"):
                values[name] = raw == "True"
            elif name in ("num_blocks", "num_pilots", "num_workers", "seed", "num_nodes", "index_base"):
                values[name] = int(raw)
            elif name in ("alpha", "nu", "lam"):
                values[name] = float(raw)
            else:
                values[name] = raw
        return cls(**values)


@dataclass
class DetectionRun:
    """Inputs and outputs of one executed RunSpec"""

    spec: RunSpec
    graph: SparseGraph = field(repr=False)
    truth: Optional[GroundTruth]
    plan: PartitionPlan = field(repr=False)
    result: ClusteringResult = field(repr=False)
    params: Optional[SbmParams] = None
    id_map: Optional[Dict[int, int]] = field(default=None, repr=False)


def build_graph(spec: RunSpec):
    """Materialize (graph, truth, params, id_map, node_order) for a spec"""
    seeds = stage_seeds(spec.seed, *spec.path)
    params = id_map = order = None
    if spec.source == "sbm":
        if spec.num_nodes is None or spec.nu is None or spec.lam is None:
            raise ValueError("sbm source needs num_nodes, nu and lam")
        params = SbmParams.balanced(spec.num_nodes, spec.num_blocks, spec.nu, spec.lam)
        graph, truth = sample_sbm(params, seeds["graph"])
    elif spec.source == "file":
        if not spec.edge_list:
            raise ValueError("file source needs edge_list")
        loaded = load_edge_list(spec.edge_list, index_base=spec.index_base)
        graph, id_map = loaded.graph, loaded.id_map
        truth = load_labels(spec.labels, id_map=id_map) if spec.labels else None
    elif spec.source == "inline":
        raise ValueError("inline graphs cannot be rebuilt from a spec")
    else:
        raise ValueError(f"unknown source {spec.source!r}")

    if spec.shuffle:
        if truth is None:
            raise ValueError("shuffling requires ground truth")
        graph, truth, order = permute_nodes(graph, truth, seeds["shuffle"])
    return graph, truth, params, id_map, order


def detect_graph(
    graph: SparseGraph,
    spec: RunSpec,
    truth: Optional[GroundTruth] = None,
    node_order: Optional[np.ndarray] = None,
) -> Tuple[PartitionPlan, ClusteringResult]:
    """
    Sample pilots, plan the partition and run distributed detection.

    Args:
        graph: Graph to cluster
        spec: Run parameters (K, l, M, policy, mode, seeds)
        truth: Ground truth (stratified pilots and proportions mode)
        node_order: Shuffle permutation to record on the result

    Returns:
        (plan, result)
    """
    N = graph.num_nodes
    K = spec.num_blocks
    seeds = stage_seeds(spec.seed, *spec.path)
    pilots = sample_pilots(N, spec.num_pilots, spec.policy, truth, seeds["pilots"], num_blocks=K)
    proportions = unbalanced_proportions(K, spec.num_workers, spec.alpha) if spec.mode == "proportions" else None
    plan = plan_partition(N, pilots, spec.num_workers, spec.mode, truth, proportions, seeds["plan"])
    result = run_detection(
        graph, K, plan, engine=spec.engine, seed=seeds["detect"],
        keep_left_singular=spec.keep_left_singular,
    )
    result = dataclasses.replace(result, seeds=dict(result.seeds, master=int(spec.seed)), node_order=node_order)
    return plan, result


def execute(spec: RunSpec) -> DetectionRun:
    """Build the graph for a spec and run detection on it"""
    graph, truth, params, id_map, order = build_graph(spec)
    plan, result = detect_graph(graph, spec, truth, order)
    if spec.source == "sbm":
        seeds = dict(result.seeds, graph=stage_seeds(spec.seed, *spec.path)["graph"])
        result = dataclasses.replace(result, seeds=seeds)
    return DetectionRun(spec, graph, truth, plan, result, params, id_map)


def replay_manifest(manifest: Dict[str, str]) -> DetectionRun:
    """Rerun a saved detection in sequential mode from its manifest"""
    spec = dataclasses.replace(RunSpec.from_manifest(manifest), engine="sequential")
    return execute(spec)
