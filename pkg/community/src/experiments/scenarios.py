"""
Scenario Runner
Seeded simulation sweeps with CSV tables, plot data and a text report

Every scenario expands its configuration into a grid, runs R seeded
repetitions per grid point and aggregates medians and IQRs. Repetition r of
grid point g uses seed path (g, r) under the master seed, so a sequential rerun
reproduces <scenario>_runs.csv and <scenario>_summary.csv byte for byte.
Wall-clock numbers live in <scenario>_timings.csv only.
"""

import itertools
import os
import time
from dataclasses import dataclass, field
from datetime import datetime
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from community.src.evaluation.metrics import evaluate_detection, misclustering_rate
from community.src.experiments.pipeline import RunSpec, detect_graph, execute
from community.src.experiments.plot_data import emit_plot_data, lee_slope
from community.src.sbm.model import GroundTruth, SparseGraph
from community.src.spectral.core import full_spectral_clustering
from community.utils.errors import CommunityDetectionError
from community.utils.graph_io import load_edge_list, load_labels
from community.utils.seeds import stage_seeds
from community.utils.validators import ExperimentConfig

METRICS = ["misclustering_rate", "pilot_rate", "lee", "red", "alpha_max", "sc_rate"]
TIMINGS = ["master", "broadcast", "workers", "gather", "total_compute", "sc_time"]
POINT_COLUMNS = ["grid_point", "N", "K", "nu", "lam", "l", "r", "M", "alpha"]

# x axis and series of the main plot per scenario
PLOT_AXES = {
    "pilot_sweep": ("r", "median_misclustering_rate", "K"),
    "signal_sweep": ("lam", "median_misclustering_rate", "nu"),
    "unbalance_sweep": ("alpha", "median_misclustering_rate", "K"),
    "sc_compare": ("N", "median_misclustering_rate", "K"),
    "file_run": ("r", "median_red", "K"),
}


@dataclass
class ScenarioOutput:
    """Tables produced by run_scenario"""

    summary: pd.DataFrame
    runs: pd.DataFrame
    timings: pd.DataFrame
    paths: Dict[str, str] = field(default_factory=dict)
    slope: Optional[float] = None


def _median_iqr(values: List[float]) -> Tuple[float, float]:
    data = np.asarray([v for v in values if v is not None], dtype=float)
    data = data[~np.isnan(data)]
    if data.size == 0:
        return float("nan"), float("nan")
    median = float(np.median(data))
    finite = data[np.isfinite(data)]
    if finite.size != data.size:
        return median, float("nan")
    q75, q25 = np.percentile(data, [75, 25])
    return median, float(q75 - q25)


def grid_points(config: ExperimentConfig, num_nodes: Optional[int] = None) -> List[Dict[str, Any]]:
    """
    Expand a configuration into grid points.

    The alpha axis only applies to unbalance_sweep; file_run takes N from the
    loaded graph and ignores nu and lam.
    """
    if config.scenario == "file_run":
        sizes, nus, lams = [num_nodes], [None], [None]
    else:
        sizes, nus, lams = config.num_nodes, config.nu, config.lam
    alphas = config.alpha if config.scenario == "unbalance_sweep" else [0.0]

    points = []
    for N, K, nu, lam, (kind, value), M, alpha in itertools.product(
        sizes, config.num_blocks, nus, lams, config.pilot_axis(), config.num_workers, alphas
    ):
        l = int(value) if kind == "count" else int(round(value * N))
        points.append({
            "grid_point": len(points),
            "N": N, "K": K, "nu": nu, "lam": lam,
            "l": l, "r": l / N, "M": M, "alpha": alpha,
        })
    return points


def _run_repetition(
    config: ExperimentConfig,
    point: Dict[str, Any],
    repetition: int,
    loaded: Optional[Tuple[SparseGraph, Optional[GroundTruth]]] = None,
) -> Tuple[Dict[str, Any], Dict[str, Any]]:
    """One seeded repetition: returns (metrics row, timing row)"""
    g = point["grid_point"]
    policy = config.pilot_policy
    spec_args = dict(
        num_blocks=point["K"],
        num_pilots=point["l"],
        num_workers=point["M"],
        seed=config.seed,
        path=(g, repetition),
        mode="proportions" if config.scenario == "unbalance_sweep" else "even",
        alpha=point["alpha"],
        engine=config.engine,
        keep_left_singular=config.compute_lee,
    )

    if loaded is None:
        spec = RunSpec(
            policy=policy, shuffle=config.shuffle_nodes, source="sbm",
            num_nodes=point["N"], nu=point["nu"], lam=point["lam"], **spec_args,
        )
        run = execute(spec)
        graph, truth, plan, result = run.graph, run.truth, run.plan, run.result
        connectivity = run.params.connectivity if config.compute_lee else None
    else:
        graph, truth = loaded
        if truth is None:
            policy = "uniform"
        spec = RunSpec(
            policy=policy, source="file", edge_list=config.edge_list,
            labels=config.labels, index_base=config.index_base, **spec_args,
        )
        plan, result = detect_graph(graph, spec, truth)
        connectivity = None

    report = evaluate_detection(result, truth, graph, plan, connectivity)
    row = {
        "grid_point": g,
        "repetition": repetition,
        "misclustering_rate": report.misclustering_rate,
        "pilot_rate": report.pilot_rate,
        "lee": report.lee,
        "red": report.red,
        "alpha_max": float(np.max(report.alpha)) if truth is not None and report.alpha.size else None,
        "sc_rate": None,
        "broadcast_bytes": result.broadcast_bytes,
        "degenerate_nodes": int(result.degenerate_nodes.size),
    }
    timing = {
        "grid_point": g,
        "repetition": repetition,
        "master": result.timings["master"],
        "broadcast": result.timings["broadcast"],
        "workers": sum(v for k, v in result.timings.items() if k.startswith("worker_")),
        "gather": result.timings["gather"],
        "total_compute": result.total_compute,
        "sc_time": None,
    }

    if config.scenario == "sc_compare" or config.compare_sc:
        seed = stage_seeds(config.seed, g, repetition)["detect"]
        start = time.perf_counter()
        baseline = full_spectral_clustering(graph, point["K"], seed)
        timing["sc_time"] = time.perf_counter() - start
        if truth is not None:
            row["sc_rate"], _ = misclustering_rate(baseline.labels, truth.labels, point["K"])
    return row, timing


def _safe_repetition(config, point, repetition, loaded):
    try:
        return _run_repetition(config, point, repetition, loaded)
    except (CommunityDetectionError, ValueError) as exc:
        return f"{type(exc).__name__}: {exc}"


def _run_point(config, point, loaded) -> Tuple[List[Any], Optional[str]]:
    """Run all repetitions of one grid point; stops at the first failure when sequential"""
    reps = range(config.repetitions)
    if config.n_jobs == 1:
        outcomes = []
        for r in reps:
            outcome = _safe_repetition(config, point, r, loaded)
            outcomes.append(outcome)
            if isinstance(outcome, str):
                break
    else:
        outcomes = Parallel(n_jobs=config.n_jobs)(
            delayed(_safe_repetition)(config, point, r, loaded) for r in reps
        )
    errors = [o for o in outcomes if isinstance(o, str)]
    if errors:
        return [], errors[0]
    return outcomes, None


def run_scenario(config: ExperimentConfig, write: bool = True) -> ScenarioOutput:
    """
    Run a scenario grid.

    Args:
        config: Validated experiment configuration
        write: Write CSV tables, plot data and the report under config.output_dir

    Returns:
        ScenarioOutput
    """
    verbose = config.verbose
    if verbose:
        print("\n" + "=" * 80)
        print(f"🧪 SCENARIO: {config.scenario.upper()}")
        print("=" * 80)

    loaded = None
    if config.scenario == "file_run":
        edges = load_edge_list(config.edge_list, index_base=config.index_base)
        truth = load_labels(config.labels, id_map=edges.id_map) if config.labels else None
        loaded = (edges.graph, truth)
        if verbose:
            print(f"\n📂 Loaded {config.edge_list}: {edges.graph.num_nodes} nodes, "
                  f"{edges.graph.num_edges} edges ({edges.self_loops} self-loops dropped, "
                  f"{edges.duplicates} duplicates collapsed)")
    points = grid_points(config, loaded[0].num_nodes if loaded else None)

    summary_rows, run_rows, timing_rows, timing_summary = [], [], [], []
    for point in points:
        base = {c: point[c] for c in POINT_COLUMNS}
        outcomes, error = _run_point(config, point, loaded)
        status = "ok" if error is None else "failed"
        summary = dict(base, status=status, error=error or "", repetitions=len(outcomes))
        timed = dict(base)
        rows = [o[0] for o in outcomes]
        times = [o[1] for o in outcomes]
        for metric in METRICS:
            summary[f"median_{metric}"], summary[f"iqr_{metric}"] = _median_iqr([r[metric] for r in rows])
        for key in TIMINGS:
            timed[f"median_{key}"], _ = _median_iqr([t[key] for t in times])
        summary_rows.append(summary)
        timing_summary.append(timed)
        run_rows.extend(rows)
        timing_rows.extend(times)

        if verbose:
            mark = "✅" if error is None else "❌"
            print(f"   {mark} point {point['grid_point'] + 1}/{len(points)}: "
                  f"N={point['N']} K={point['K']} l={point['l']} M={point['M']} "
                  f"nu={point['nu']} lam={point['lam']} alpha={point['alpha']} -> "
                  + (f"median rate {summary['median_misclustering_rate']:.4f}" if error is None else error))

    output = ScenarioOutput(
        summary=pd.DataFrame(summary_rows),
        runs=pd.DataFrame(run_rows),
        timings=pd.DataFrame(timing_summary),
    )
    if config.compute_lee and output.summary["median_lee"].notna().sum() >= 2:
        output.slope = lee_slope(output.summary)

    if write:
        output.paths = write_outputs(config, output)
    if verbose:
        print("\n" + "=" * 80)
        print("✅ SCENARIO COMPLETED")
        print("=" * 80)
        if output.paths:
            print(f"\n📁 Outputs saved in: {config.output_dir}")
    return output


def write_outputs(config: ExperimentConfig, output: ScenarioOutput) -> Dict[str, str]:
    """Write tables, plot data and the text report; returns the written paths"""
    os.makedirs(config.output_dir, exist_ok=True)
    name = config.scenario
    paths = {
        "summary": os.path.join(config.output_dir, f"{name}_summary.csv"),
        "runs": os.path.join(config.output_dir, f"{name}_runs.csv"),
        "timings": os.path.join(config.output_dir, f"{name}_timings.csv"),
        "plot": os.path.join(config.output_dir, f"{name}_plot.csv"),
        "report": os.path.join(config.output_dir, f"{name}_report.txt"),
    }
    output.summary.to_csv(paths["summary"], index=False)
    output.runs.to_csv(paths["runs"], index=False)
    output.timings.to_csv(paths["timings"], index=False)

    x, y, series = PLOT_AXES[name]
    ok = output.summary[output.summary["status"] == "ok"] if not output.summary.empty else output.summary
    emit_plot_data(ok, x, y, series, paths["plot"])
    if config.compute_lee:
        paths["lee_plot"] = os.path.join(config.output_dir, f"{name}_lee_plot.csv")
        emit_plot_data(ok, "l", "median_lee", "N", paths["lee_plot"], log_x=True)
    if (name == "sc_compare" or config.compare_sc) and not output.timings.empty:
        axis = "r" if name == "file_run" else "N"
        paths["timing_plot"] = os.path.join(config.output_dir, f"{name}_timing_plot.csv")
        melted = output.timings[[axis, "median_total_compute", "median_sc_time"]].melt(
            id_vars=axis, var_name="series", value_name="seconds"
        )
        emit_plot_data(melted, axis, "seconds", "series", paths["timing_plot"])

    save_scenario_report(config, output, paths["report"])
    return paths


def save_scenario_report(config: ExperimentConfig, output: ScenarioOutput, report_path: str) -> str:
    """Human-readable scenario report"""
    with open(report_path, "w", encoding="utf-8") as f:
        f.write("=" * 80 + "\n")
        f.write(f"PILOTNET - {config.scenario.upper()} REPORT\n")
        f.write("=" * 80 + "\n")
        f.write(f"Generated: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}\n")
        f.write(f"Master seed: {config.seed}\n")
        f.write(f"Repetitions: {config.repetitions}\n")
        f.write(f"Engine: {config.engine}\n\n")

        f.write("=" * 80 + "\n")
        f.write("GRID SUMMARY (median / IQR)\n")
        f.write("=" * 80 + "\n")
        columns = POINT_COLUMNS + ["status", "median_misclustering_rate", "iqr_misclustering_rate"]
        if config.compute_lee:
            columns += ["median_lee"]
        if config.scenario == "sc_compare" or config.compare_sc:
            columns += ["median_sc_rate"]
        if config.scenario == "file_run":
            columns += ["median_red"]
        if not output.summary.empty:
            f.write(output.summary[columns].to_string(index=False) + "\n\n")

        f.write("=" * 80 + "\n")
        f.write("COMPUTE TIME (median seconds)\n")
        f.write("=" * 80 + "\n")
        if not output.timings.empty:
            f.write(output.timings.to_string(index=False) + "\n\n")

        failed = output.summary[output.summary["status"] != "ok"] if not output.summary.empty else output.summary
        if len(failed):
            f.write("=" * 80 + "\n")
            f.write("FAILED GRID POINTS\n")
            f.write("=" * 80 + "\n")
            for _, row in failed.iterrows():
                f.write(f"  point {row['grid_point']}: {row['error']}\n")
            f.write("\n")

        if output.slope is not None:
            f.write(f"LEE slope against log l: {output.slope:.4f}\n\n")

        f.write("=" * 80 + "\n")
        f.write("END OF REPORT\n")
        f.write("=" * 80 + "\n")

    if config.verbose:
        print(f"\n   ✅ Scenario report saved: {report_path}")
    return report_path
