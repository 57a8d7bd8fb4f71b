"""
Evaluation Package
Metrics for detection runs
"""

from community.src.evaluation.metrics import (
    REPORT_COLUMNS,
    EvalReport,
    average_lee,
    evaluate_detection,
    lee,
    misclustering_rate,
    relative_density,
    unbalance_alpha,
)

__all__ = [
    "REPORT_COLUMNS",
    "EvalReport",
    "average_lee",
    "evaluate_detection",
    "lee",
    "misclustering_rate",
    "relative_density",
    "unbalance_alpha",
]
