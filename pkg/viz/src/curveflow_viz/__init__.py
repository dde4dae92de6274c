"""Figures from curveflow run directories.

Reads the CSV streams a run writes (``interfaces.csv`` with columns
t, component_id, vertex_index, x, y[, z], V and ``diagnostics.csv``) and
renders the two standard panels: overlaid interface snapshots coloured by
interface velocity, and the normalised-cell-number history with an
optional analytic overlay.
"""

from curveflow_viz.plots import (
    SnapshotSeries,
    load_diagnostics,
    load_snapshots,
    plot_cell_number,
    plot_snapshots,
)

__all__ = [
    "SnapshotSeries",
    "load_diagnostics",
    "load_snapshots",
    "plot_cell_number",
    "plot_snapshots",
]
