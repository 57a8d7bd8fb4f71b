"""
Plot Data
Plot-ready CSV emission and LEE slope fitting
"""

import os
from typing import Optional

import numpy as np
import pandas as pd

PLOT_COLUMNS = ["x", "y", "series"]


def emit_plot_data(
    table: pd.DataFrame,
    x: str,
    y: str,
    series: str,
    path: Optional[str] = None,
    log_x: bool = False,
) -> pd.DataFrame:
    """
    Reduce a result table to (x, y, series) rows.

    Rows keep the table's order; rows with a missing y are dropped. An empty
    table gives an empty frame (and a header-only file).

    Args:
        table: Summary table
        x: Column for the x axis
        y: Column for the y axis
        series: Column identifying the curve
        path: Optional CSV destination
        log_x: Natural log of x

    Returns:
        DataFrame with columns x, y, series
    """
    if table.empty:
        plot = pd.DataFrame(columns=PLOT_COLUMNS)
    else:
        missing = [c for c in (x, y, series) if c not in table.columns]
        if missing:
            raise KeyError(f"table has no column(s) {missing}")
        plot = pd.DataFrame({
            "x": np.log(table[x].astype(float)) if log_x else table[x],
            "y": table[y],
            "series": table[series],
        })
        plot = plot[plot["y"].notna()].reset_index(drop=True)

    if path is not None:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        plot.to_csv(path, index=False)
    return plot


def lee_slope(table: pd.DataFrame, pilots: str = "l", lee: str = "median_lee") -> float:
    """Least-squares slope of median LEE against log l"""
    points = table[[pilots, lee]].replace([np.inf, -np.inf], np.nan).dropna()
    if len(points) < 2:
        raise ValueError("need at least two finite LEE points to fit a slope")
    slope, _ = np.polyfit(np.log(points[pilots].astype(float)), points[lee].astype(float), 1)
    return float(slope)
