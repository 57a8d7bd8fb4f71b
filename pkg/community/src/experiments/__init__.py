"""
Experiments Package
Detection pipeline, scenario sweeps and plot-ready outputs
"""

from community.src.experiments.pipeline import DetectionRun, RunSpec, detect_graph, execute, replay_manifest
from community.src.experiments.plot_data import emit_plot_data, lee_slope
from community.src.experiments.scenarios import ScenarioOutput, grid_points, run_scenario

__all__ = [
    "DetectionRun",
    "RunSpec",
    "ScenarioOutput",
    "detect_graph",
    "emit_plot_data",
    "execute",
    "grid_points",
    "lee_slope",
    "replay_manifest",
    "run_scenario",
]
