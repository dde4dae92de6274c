"""Deterministic synthetic masks for the bundled scenarios.

The histology-derived interfaces of the reference experiments are not
redistributable, so the bundled reproductions rasterise analytic stand-ins
with the same character: a single non-convex spicule, a field of several
spicules, and a four-pore scaffold whose fourth pore is crescent-shaped
(its inner arc is an extended convex-from-tissue segment, which is what a
curvature-gated run needs to exercise the static branch).

All masks are written as plain-text matrices (row index = x, column = y),
value 1 inside the structure.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np


def _pixel_grid(n: int, pixel_size: float):
    idx = (np.arange(n) - (n - 1) / 2.0) * pixel_size
    return np.meshgrid(idx, idx, indexing="ij")


def _disc(x, y, cx, cy, r):
    return np.hypot(x - cx, y - cy) <= r


def spicule_mask(n: int = 128, pixel_size: float = 0.01) -> np.ndarray:
    """One bone-spicule-like blob: a bent chain of overlapping discs with a
    side lobe; non-convex with pronounced waist regions."""
    x, y = _pixel_grid(n, pixel_size)
    m = np.zeros_like(x, dtype=bool)
    spine = [
        (-0.38, -0.12, 0.16),
        (-0.20, -0.02, 0.17),
        (0.00, 0.02, 0.15),
        (0.20, -0.04, 0.17),
        (0.38, -0.16, 0.14),
        (0.12, 0.18, 0.12),  # side lobe
    ]
    for cx, cy, r in spine:
        m |= _disc(x, y, cx, cy, r)
    return m.astype(float)


def multi_spicule_mask(n: int = 160, pixel_size: float = 0.01) -> np.ndarray:
    """Several disconnected spicules of varying size (fusion/fragmentation
    scenarios)."""
    x, y = _pixel_grid(n, pixel_size)
    m = np.zeros_like(x, dtype=bool)
    blobs = [
        [(-0.45, 0.35, 0.13), (-0.28, 0.42, 0.12)],
        [(0.30, 0.40, 0.11), (0.45, 0.30, 0.12), (0.52, 0.14, 0.10)],
        [(-0.50, -0.25, 0.11), (-0.36, -0.38, 0.12)],
        [(0.05, -0.05, 0.10)],
        [(0.35, -0.35, 0.12), (0.20, -0.45, 0.10)],
    ]
    for blob in blobs:
        for cx, cy, r in blob:
            m |= _disc(x, y, cx, cy, r)
    return m.astype(float)


def scaffold_mask(n: int = 256, pixel_size: float = 0.015) -> np.ndarray:
    """Tissue slab with four disconnected pores: three circular and one
    annular (a tissue island inside the fourth pore).  The island boundary
    is convex seen from the tissue, so a curvature-gated run must hold it
    static while every concave pore contour infills.  Value 1 = tissue."""
    x, y = _pixel_grid(n, pixel_size)
    pores = np.zeros_like(x, dtype=bool)
    pores |= _disc(x, y, -0.80, 0.80, 0.40)
    pores |= _disc(x, y, 0.80, 0.80, 0.38)
    pores |= _disc(x, y, 0.80, -0.80, 0.42)
    pores |= _disc(x, y, -0.80, -0.80, 0.46) & ~_disc(x, y, -0.80, -0.80, 0.10)
    return (~pores).astype(float)


_GENERATORS = {
    "spicule": spicule_mask,
    "multi_spicule": multi_spicule_mask,
    "scaffold": scaffold_mask,
}


def mask_pixel_size(name: str) -> float:
    return {"spicule": 0.01, "multi_spicule": 0.01, "scaffold": 0.015}[name]


def write_mask(name: str, path: str | Path) -> Path:
    """Generate the named mask as a text matrix at ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, _GENERATORS[name](), fmt="%d")
    return path
