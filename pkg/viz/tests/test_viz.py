"""Smoke tests: render both figure types from real run directories."""

import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from curveflow_viz.cli import main as viz_main
from curveflow_viz.plots import (
    load_diagnostics,
    load_snapshots,
    plot_cell_number,
    plot_snapshots,
)

TWO_STRUT_CFG = """
dim = 2
extent = 5.4, 3.6
spacing = 0.04
kind = multi_circle
centers = -0.95, 0.0; 0.95, 0.0
radii = {r}, {r}
tissue_inside = true
v0 = 0.016
D = 0.01
method = 3
dt = 0.03
t_end = 22.0
output_interval = 2.0
epsilon_reinit = 10.0
""".format(r=9.0 / (4.0 * math.pi))

CIRCLE_CFG = """
dim = 2
extent = 2.2
spacing = 0.04
kind = circle
radius = 0.7
tissue_inside = false
v0 = 0.016
D = 0.01
A = 0.1
method = 3
dt = 0.02
t_end = 2.0
output_interval = 0.5
"""


def run_primary(cfg_text: str, out_dir: Path) -> None:
    """Drive the primary package strictly through its CLI."""
    cfg = out_dir.parent / (out_dir.name + ".cfg")
    cfg.write_text(cfg_text)
    proc = subprocess.run(
        [sys.executable, "-m", "curveflow.cli", "run", str(cfg), "--out", str(out_dir)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr


@pytest.fixture(scope="module")
def strut_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("runs") / "struts"
    run_primary(TWO_STRUT_CFG, out)
    return out


@pytest.fixture(scope="module")
def circle_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("runs") / "circle"
    run_primary(CIRCLE_CFG, out)
    return out


class TestSnapshots:
    def test_two_strut_series_renders_and_merges(self, strut_run, tmp_path):
        out = tmp_path / "snapshots.png"
        path = plot_snapshots(strut_run, out)
        assert path.exists() and path.stat().st_size > 10_000
        # the data behind the figure shows the merge: component count drops 2 -> 1
        series = load_snapshots(strut_run)
        comps = [len(series.frames[t]) for t in series.times]
        assert comps[0] == 2
        assert comps[-1] == 1
        merge_time = series.times[next(i for i, c in enumerate(comps) if c == 1)]
        assert merge_time >= 16.0  # merge happens after t ~ 17 days (2-day cadence)

    def test_missing_dir_is_descriptive(self, tmp_path):
        with pytest.raises(FileNotFoundError, match="interfaces.csv"):
            plot_snapshots(tmp_path / "nope", tmp_path / "x.png")


class TestCellNumber:
    def test_overlay_drift_matches_diagnostics(self, circle_run, tmp_path):
        out = tmp_path / "cells.png"
        path, drift = plot_cell_number(circle_run, out, overlay="exp_decay", A=0.1)
        assert path.exists() and path.stat().st_size > 5_000
        diag = load_diagnostics(circle_run)
        expected = float(np.abs(diag["N_ratio"] - np.exp(-0.1 * diag["t"])).max())
        assert drift == pytest.approx(expected, abs=1e-12)

    def test_constant_overlay(self, strut_run, tmp_path):
        out = tmp_path / "cells2.png"
        path, drift = plot_cell_number(strut_run, out, overlay="constant")
        assert path.exists() and path.stat().st_size > 5_000
        assert np.isfinite(drift)

    def test_rerender_identical(self, circle_run, tmp_path):
        a = tmp_path / "a.png"
        b = tmp_path / "b.png"
        plot_cell_number(circle_run, a, overlay="constant")
        plot_cell_number(circle_run, b, overlay="constant")
        assert a.read_bytes() == b.read_bytes()


class TestCli:
    def test_snapshots_subcommand(self, circle_run, tmp_path, capsys):
        out = tmp_path / "cli_snap.png"
        assert viz_main(["snapshots", str(circle_run), "-o", str(out)]) == 0
        assert out.exists()
        assert "wrote" in capsys.readouterr().out

    def test_cellnumber_subcommand(self, circle_run, tmp_path, capsys):
        out = tmp_path / "cli_cells.png"
        rc = viz_main(
            ["cellnumber", str(circle_run), "-o", str(out), "--overlay", "exp_decay", "-A", "0.1"]
        )
        assert rc == 0
        assert "max drift" in capsys.readouterr().out

    def test_error_exit(self, tmp_path, capsys):
        assert viz_main(["snapshots", str(tmp_path / "missing")]) == 1
        assert "error" in capsys.readouterr().err
