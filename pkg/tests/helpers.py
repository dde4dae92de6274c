"""Shared analytic-field builders for the test suite."""

import numpy as np

from curveflow.grid import GHOST_WIDTH, GridSpec, ScalarField


def field_from_function(grid: GridSpec, f) -> ScalarField:
    """Sample f(x, y[, z]) at every node including ghosts (analytic ghosts,
    so stencil tests are not polluted by boundary extrapolation)."""
    g = GHOST_WIDTH
    axes = [
        grid.origin[a] + grid.spacing * (np.arange(grid.n[a] + 1 + 2 * g) - g)
        for a in range(grid.dim)
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    return ScalarField(grid=grid, values=np.asarray(f(*mesh), dtype=float))


def circle_sdf(cx: float, cy: float, r: float):
    return lambda x, y: np.hypot(x - cx, y - cy) - r


def sphere_sdf(cx: float, cy: float, cz: float, r: float):
    return lambda x, y, z: np.sqrt((x - cx) ** 2 + (y - cy) ** 2 + (z - cz) ** 2) - r
