"""
Graph I/O
Edge lists, label files and persisted detection runs

Formats (all UTF-8 text):

    edge list   one "u v" pair per line, whitespace separated, non-negative
                integer ids (0- or 1-based, declared by the caller); lines whose
                first non-blank character is '#' and blank lines are skipped
    labels      "node label" per line, separated by whitespace or a comma; an
                optional first line "node,label" is treated as a header
    labels.csv  written by save_result: header "node,label", one row per node
                in node order
    manifest    one "key=value" per line, no spaces around '=', keys in the
                order written; first line "format=pilotnet-manifest/1"
"""

import os
from typing import Any, Dict, Mapping, NamedTuple, Optional

import joblib
import numpy as np
import pandas as pd

from community.src.evaluation.metrics import REPORT_COLUMNS
from community.src.sbm.model import GroundTruth, SparseGraph
from community.utils.errors import EmptyGraphError, GraphParseError, MissingLabelError

MANIFEST_FORMAT = "pilotnet-manifest/1"
LABELS_FILE = "labels.csv"
REPORT_FILE = "report.csv"
MANIFEST_FILE = "manifest.txt"
RESULT_FILE = "result.joblib"


class EdgeList(NamedTuple):
    graph: SparseGraph
    id_map: Dict[int, int]
    self_loops: int
    duplicates: int


def load_edge_list(path: str, index_base: int = 0) -> EdgeList:
    """
    Load an undirected simple graph from an edge-list file.

    Edges are symmetrized, duplicates collapsed and self-loops dropped. Node
    ids are compacted to 0..N-1 in increasing id order.

    Args:
        path: Edge-list file
        index_base: 0 or 1, the smallest legal node id

    Returns:
        EdgeList(graph, id_map, self_loops, duplicates) with id_map mapping
        file ids to compact indices

    Raises:
        GraphParseError: malformed line (reported with its line number)
        EmptyGraphError: no edges left after dropping self-loops
    """
    if index_base not in (0, 1):
        raise ValueError(f"index_base must be 0 or 1, got {index_base}")

    sources, targets = [], []
    with open(path, "r", encoding="utf-8") as handle:
        for line_number, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split()
            if len(fields) != 2:
                raise GraphParseError(path, line_number, raw.rstrip("\n"))
            try:
                u, v = int(fields[0]), int(fields[1])
            except ValueError:
                raise GraphParseError(path, line_number, raw.rstrip("\n"), "node ids must be integers")
            if u < index_base or v < index_base:
                raise GraphParseError(path, line_number, raw.rstrip("\n"), f"node ids must be >= {index_base}")
            sources.append(u)
            targets.append(v)

    return graph_from_pairs(sources, targets, source=path)


def graph_from_pairs(sources, targets, source: str = "<edges>") -> EdgeList:
    """Build an EdgeList from endpoint id sequences (same rules as load_edge_list)"""
    u = np.asarray(sources, dtype=np.int64)
    v = np.asarray(targets, dtype=np.int64)
    self_loops = int(np.count_nonzero(u == v))
    if self_loops == u.size:
        raise EmptyGraphError(f"{source}: no edges")

    ids, compact = np.unique(np.concatenate([u, v]), return_inverse=True)
    cu, cv = compact[: u.size], compact[u.size:]
    graph = SparseGraph.from_edges(ids.size, cu, cv)
    duplicates = int((u.size - self_loops) - graph.num_edges)
    id_map = {int(i): k for k, i in enumerate(ids)}
    return EdgeList(graph, id_map, self_loops, duplicates)


def save_edge_list(graph: SparseGraph, path: str, id_map: Optional[Mapping[int, int]] = None) -> str:
    """Write each undirected edge once as "u v" with u < v (original ids when id_map is given)"""
    edges = graph.edges()
    if id_map is not None:
        original = np.empty(graph.num_nodes, dtype=np.int64)
        for node_id, index in id_map.items():
            original[index] = node_id
        edges = original[edges]
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(f"# {graph.num_nodes} nodes, {len(edges)} edges\n")
        for a, b in edges:
            handle.write(f"{a} {b}\n")
    return path


def _compact_labels(values: pd.Series):
    """Map label values to 0..K-1 in sorted order; returns (codes, label_map or None)"""
    numeric = pd.to_numeric(values, errors="coerce")
    keys = numeric.astype("int64") if numeric.notna().all() else values
    uniques = sorted(pd.unique(keys).tolist())
    mapping = {u: k for k, u in enumerate(uniques)}
    codes = keys.map(mapping).to_numpy(dtype=np.int64)
    already_compact = uniques == list(range(len(uniques)))
    return codes, (None if already_compact else mapping)


def load_labels(
    path: str,
    id_map: Optional[Mapping[int, int]] = None,
    num_nodes: Optional[int] = None,
) -> GroundTruth:
    """
    Load ground-truth labels aligned to the graph's node indices.

    Args:
        path: Labels file
        id_map: File ids to node indices (from load_edge_list); ids absent from
            the map are ignored
        num_nodes: Node count when no id_map is given (defaults to max id + 1)

    Returns:
        GroundTruth with label_map set when labels had to be remapped

    Raises:
        MissingLabelError: some node has no label
    """
    frame = pd.read_csv(
        path, sep=r"[\s,]+", engine="python", header=None, comment="#",
        dtype=str, skip_blank_lines=True,
    )
    if frame.shape[1] < 2:
        raise GraphParseError(path, 1, "", "expected 'node label' pairs")
    frame = frame.iloc[:, :2]
    frame.columns = ["node", "label"]
    if len(frame) and not str(frame.iloc[0]["node"]).lstrip("-").isdigit():
        frame = frame.iloc[1:]
    frame = frame.dropna()
    nodes = pd.to_numeric(frame["node"], errors="coerce")
    if nodes.isna().any():
        bad = frame.index[nodes.isna()][0]
        raise GraphParseError(path, int(bad) + 1, str(frame.loc[bad, "node"]), "node ids must be integers")
    frame = frame.assign(node=nodes.astype("int64")).drop_duplicates("node", keep="last")

    if id_map is not None:
        frame = frame[frame["node"].isin(list(id_map.keys()))]
        index = frame["node"].map(id_map).to_numpy(dtype=np.int64)
        expected = len(id_map)
        inverse = {v: k for k, v in id_map.items()}
    else:
        index = frame["node"].to_numpy(dtype=np.int64)
        expected = num_nodes if num_nodes is not None else (int(index.max()) + 1 if index.size else 0)
        frame = frame[index < expected]
        index = index[index < expected]
        inverse = None

    covered = np.zeros(expected, dtype=bool)
    covered[index] = True
    if not covered.all():
        missing = np.flatnonzero(~covered)
        if inverse is not None:
            missing = sorted(inverse[int(i)] for i in missing)
        raise MissingLabelError([int(i) for i in missing])

    codes, label_map = _compact_labels(frame["label"].reset_index(drop=True))
    labels = np.empty(expected, dtype=np.int64)
    labels[index] = codes
    return GroundTruth(labels, int(codes.max()) + 1, label_map)


def save_result(
    result,
    report,
    directory: str,
    manifest: Optional[Mapping[str, Any]] = None,
    id_map: Optional[Mapping[int, int]] = None,
) -> Dict[str, str]:
    """
    Persist a detection run.

    Writes labels.csv, report.csv, manifest.txt (run keys, seeds and timings
    plus the caller's manifest entries) and result.joblib.

    Args:
        result: ClusteringResult
        report: EvalReport (may be None)
        directory: Output directory (created if needed)
        manifest: Extra manifest entries (configuration needed for replay)
        id_map: When given, labels.csv uses the original file ids

    Returns:
        Dictionary of written paths
    """
    if result.num_nodes == 0:
        raise ValueError("refusing to save an empty result")
    os.makedirs(directory, exist_ok=True)
    paths = {
        "labels": os.path.join(directory, LABELS_FILE),
        "report": os.path.join(directory, REPORT_FILE),
        "manifest": os.path.join(directory, MANIFEST_FILE),
        "result": os.path.join(directory, RESULT_FILE),
    }

    nodes = np.arange(result.num_nodes)
    if id_map is not None:
        nodes = np.empty(result.num_nodes, dtype=np.int64)
        for node_id, index in id_map.items():
            nodes[index] = node_id
    pd.DataFrame({"node": nodes, "label": result.labels}).to_csv(paths["labels"], index=False)

    if report is not None:
        pd.DataFrame([report.to_row()], columns=REPORT_COLUMNS).to_csv(paths["report"], index=False)

    entries: Dict[str, Any] = {
        "format": MANIFEST_FORMAT,
        "num_nodes": result.num_nodes,
        "num_blocks": result.num_blocks,
        "num_pilots": result.pilot_indices.size,
        "engine": result.engine,
        "broadcast_bytes": result.broadcast_bytes,
        "degenerate_nodes": result.degenerate_nodes.size,
    }
    for key in sorted(result.seeds):
        entries[f"seed.{key}"] = result.seeds[key]
    for key, value in (manifest or {}).items():
        entries[key] = value
    for key in sorted(result.timings):
        entries[f"timing.{key}"] = f"{result.timings[key]:.6f}"
    write_manifest(entries, paths["manifest"])

    joblib.dump(result, paths["result"])
    return paths


def write_manifest(entries: Mapping[str, Any], path: str) -> str:
    with open(path, "w", encoding="utf-8") as handle:
        for key, value in entries.items():
            if "=" in key or "\n" in str(value):
                raise ValueError(f"manifest entry {key!r} cannot be written as key=value")
            handle.write(f"{key}={value}\n")
    return path


def load_manifest(path: str) -> Dict[str, str]:
    """Read a manifest into an ordered dictionary of strings"""
    entries: Dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as handle:
        for line_number, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise GraphParseError(path, line_number, line, "expected key=value")
            entries[key] = value
    if entries.get("format") != MANIFEST_FORMAT:
        raise GraphParseError(path, 1, entries.get("format", ""), f"expected format={MANIFEST_FORMAT}")
    return entries


def load_saved_labels(path: str) -> np.ndarray:
    """Label column of a labels.csv written by save_result, in node order"""
    frame = pd.read_csv(path)
    return frame["label"].to_numpy(dtype=np.int64)


def load_result(directory: str):
    """Load the ClusteringResult persisted by save_result"""
    path = os.path.join(directory, RESULT_FILE)
    if not os.path.exists(path):
        raise FileNotFoundError(f"Result not found: {path}")
    return joblib.load(path)
