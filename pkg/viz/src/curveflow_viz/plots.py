"""Snapshot and cell-number figures."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.collections import LineCollection
from scipy.spatial import cKDTree


@dataclass
class SnapshotSeries:
    """Interface samples grouped by time: frames[t][component] -> (points, V)."""

    times: list[float]
    frames: dict[float, dict[int, tuple[np.ndarray, np.ndarray]]]
    dim: int
    v_limits: tuple[float, float]


def load_snapshots(run_dir: str | Path) -> SnapshotSeries:
    path = Path(run_dir) / "interfaces.csv"
    if not path.exists():
        raise FileNotFoundError(f"no interfaces.csv in {run_dir}")
    frames: dict[float, dict[int, tuple[list, list]]] = {}
    vmin, vmax = math.inf, -math.inf
    with open(path) as f:
        reader = csv.reader(f)
        header = next(reader)
        dim = 3 if "z" in header else 2
        for row in reader:
            if not row:
                continue
            t = float(row[0])
            comp = int(row[1])
            coords = tuple(float(c) for c in row[3 : 3 + dim])
            v = float(row[3 + dim])
            pts, vs = frames.setdefault(t, {}).setdefault(comp, ([], []))
            pts.append(coords)
            vs.append(v)
            vmin = min(vmin, v)
            vmax = max(vmax, v)
    if not frames:
        raise ValueError(f"interfaces.csv in {run_dir} holds no samples")
    out: dict[float, dict[int, tuple[np.ndarray, np.ndarray]]] = {}
    for t, comps in frames.items():
        out[t] = {
            c: (np.asarray(pts), np.asarray(vs)) for c, (pts, vs) in comps.items()
        }
    if vmin == vmax:
        vmin, vmax = vmin - 1e-12, vmax + 1e-12
    return SnapshotSeries(
        times=sorted(out), frames=out, dim=dim, v_limits=(vmin, vmax)
    )


def load_diagnostics(run_dir: str | Path) -> dict[str, np.ndarray]:
    path = Path(run_dir) / "diagnostics.csv"
    if not path.exists():
        raise FileNotFoundError(f"no diagnostics.csv in {run_dir}")
    data = np.genfromtxt(path, delimiter=",", names=True)
    if data.shape == ():  # single row
        data = data.reshape(1)
    return {name: np.atleast_1d(data[name]) for name in data.dtype.names}


def _chain(points: np.ndarray) -> np.ndarray:
    """Order an unordered dense contour sample into a drawing path by greedy
    nearest-neighbour walking (good enough for rendering closed loops)."""
    n = len(points)
    if n < 3:
        return np.arange(n)
    tree = cKDTree(points)
    visited = np.zeros(n, dtype=bool)
    order = [0]
    visited[0] = True
    for _ in range(n - 1):
        last = order[-1]
        for k in (2, 4, 8, 16, 32, n):
            dist, idx = tree.query(points[last], k=min(k, n))
            nxt = next((j for j in np.atleast_1d(idx) if not visited[j]), None)
            if nxt is not None:
                break
        if nxt is None:
            break
        order.append(int(nxt))
        visited[nxt] = True
    return np.asarray(order)


def _segments_with_values(points: np.ndarray, values: np.ndarray):
    order = _chain(points)
    pts = points[order]
    vals = values[order]
    # close the loop when endpoints meet
    gap = np.linalg.norm(pts[0] - pts[-1])
    med = np.median(np.linalg.norm(np.diff(pts, axis=0), axis=1)) if len(pts) > 1 else 0
    if med > 0 and gap < 4 * med:
        pts = np.vstack([pts, pts[:1]])
        vals = np.concatenate([vals, vals[:1]])
    segs = np.stack([pts[:-1], pts[1:]], axis=1)
    seg_vals = 0.5 * (vals[:-1] + vals[1:])
    # drop chaining artefacts (jumps much longer than the typical edge)
    if med > 0:
        keep = np.linalg.norm(segs[:, 1] - segs[:, 0], axis=1) < 6 * med
        segs, seg_vals = segs[keep], seg_vals[keep]
    return segs, seg_vals


def plot_snapshots(run_dir: str | Path, out: str | Path, cmap: str = "viridis") -> Path:
    """Overlay every snapshot's interface, colour-mapped by the interface
    velocity; 3D runs are drawn as an equatorial slice plus mean radius
    against time."""
    series = load_snapshots(run_dir)
    vmin, vmax = series.v_limits
    if series.dim == 2:
        fig, ax = plt.subplots(figsize=(7, 6))
        for t in series.times:
            for comp, (pts, vs) in sorted(series.frames[t].items()):
                segs, seg_vals = _segments_with_values(pts, vs)
                lc = LineCollection(segs, cmap=cmap, linewidths=1.2)
                lc.set_array(seg_vals)
                lc.set_clim(vmin, vmax)
                ax.add_collection(lc)
        ax.autoscale()
        ax.set_aspect("equal")
        ax.set_xlabel("x (mm)")
        ax.set_ylabel("y (mm)")
        ax.set_title(f"interface snapshots, t = {series.times[0]:g}..{series.times[-1]:g} days")
        fig.colorbar(plt.cm.ScalarMappable(
            norm=plt.Normalize(vmin, vmax), cmap=cmap), ax=ax, label="V (mm/day)")
    else:
        fig, (ax, ax2) = plt.subplots(1, 2, figsize=(12, 5.5))
        slab = None
        for t in series.times:
            for comp, (pts, vs) in sorted(series.frames[t].items()):
                if slab is None and len(pts) > 1:
                    nn = cKDTree(pts).query(pts, k=2)[0][:, 1]
                    slab = 1.5 * float(np.median(nn))
                sel = np.abs(pts[:, 2]) < (slab or 0.1)
                if sel.any():
                    sc = ax.scatter(
                        pts[sel, 0], pts[sel, 1], c=vs[sel], s=2.0,
                        cmap=cmap, vmin=vmin, vmax=vmax,
                    )
        radii = [
            np.mean([
                np.linalg.norm(pts, axis=1).mean()
                for pts, _ in series.frames[t].values()
            ])
            for t in series.times
        ]
        ax2.plot(series.times, radii, "o-")
        ax2.set_xlabel("t (days)")
        ax2.set_ylabel("mean radius (mm)")
        ax.set_aspect("equal")
        ax.set_xlabel("x (mm)")
        ax.set_ylabel("y (mm)")
        ax.set_title("equatorial slice of interface samples")
        fig.colorbar(sc, ax=ax, label="V (mm/day)")
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(out, dpi=130)
    plt.close(fig)
    return out


def overlay_values(kind: str, t: np.ndarray, A: float = 0.0) -> np.ndarray | None:
    if kind == "none":
        return None
    if kind == "constant":
        return np.ones_like(t)
    if kind == "exp_decay":
        return np.exp(-A * t)
    raise ValueError(f"unknown overlay {kind!r}")


def plot_cell_number(
    run_dir: str | Path,
    out: str | Path,
    overlay: str = "none",
    A: float = 0.0,
) -> tuple[Path, float]:
    """Normalised cell number against time, with an optional analytic
    overlay (flat, or exp(-A t)); returns the written path and the maximum
    drift |N - overlay| annotated on the figure (nan when no overlay)."""
    diag = load_diagnostics(run_dir)
    t = diag["t"]
    n = diag["N_ratio"]
    ref = overlay_values(overlay, t, A)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(t, n, "o-", label="simulation")
    drift = float("nan")
    if ref is not None:
        label = "N/N0 = 1" if overlay == "constant" else f"exp(-{A:g} t)"
        ax.plot(t, ref, "--", label=label)
        drift = float(np.abs(n - ref).max())
        ax.annotate(
            f"max drift = {drift:.4f}",
            xy=(0.02, 0.04), xycoords="axes fraction", fontsize=9,
        )
    ax.set_xlabel("t (days)")
    ax.set_ylabel("N(t) / N0")
    ax.set_title("normalised cell number")
    ax.legend()
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(out, dpi=130)
    plt.close(fig)
    return out, drift
