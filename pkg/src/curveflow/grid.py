"""Uniform Cartesian grid containers and boundary handling.

Fields live on the nodes of a uniform 2D/3D grid and carry a layer of
ghost nodes (width >= 3, the HJ-WENO5 stencil reach) around the interior.
Ghosts are populated by :func:`fill_ghost` before any stencil call; two
rules are available because the physical problem never pins one down:

* ``"linear"`` (default) -- linear extrapolation of the two outermost
  interior values, which preserves the slope of a signed distance
  function through the domain edge;
* ``"zero_gradient"`` -- copy of the edge value (zero normal derivative).

Array layout is index-matches-axis: ``values[i, j(, k)]`` with i along x.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from curveflow.errors import ConfigurationError, EmptyInterfaceError

GHOST_WIDTH = 3

_RULES = ("linear", "zero_gradient")


@dataclass(frozen=True)
class GridSpec:
    """Uniform node-centred grid: ``n`` counts cells, so nodes = n + 1 per axis.

    ``spacing`` is shared by all axes; ``extent`` is derived as n * spacing.
    """

    dim: int
    origin: tuple[float, ...]
    n: tuple[int, ...]
    spacing: float

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ConfigurationError(f"dim must be 2 or 3, got {self.dim}")
        if len(self.origin) != self.dim or len(self.n) != self.dim:
            raise ConfigurationError("origin and n must have one entry per axis")
        if self.spacing <= 0.0:
            raise ConfigurationError(f"spacing must be positive, got {self.spacing}")
        if any(ni < 7 for ni in self.n):
            raise ConfigurationError(f"need at least 7 cells per axis, got {self.n}")

    @property
    def extent(self) -> tuple[float, ...]:
        return tuple(ni * self.spacing for ni in self.n)

    @property
    def shape(self) -> tuple[int, ...]:
        """Interior node counts per axis."""
        return tuple(ni + 1 for ni in self.n)

    def axis_coords(self, axis: int) -> NDArray[np.float64]:
        return self.origin[axis] + self.spacing * np.arange(self.n[axis] + 1)

    def meshgrid(self) -> tuple[NDArray[np.float64], ...]:
        axes = [self.axis_coords(a) for a in range(self.dim)]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    @staticmethod
    def centered(dim: int, extent: float | tuple[float, ...], spacing: float) -> "GridSpec":
        """Grid of the given physical extent centred on the coordinate origin.

        The extent is rounded up to an even number of cells so a node sits
        exactly at the origin (symmetric initial data stays symmetric).
        """
        if isinstance(extent, (int, float)):
            extent = (float(extent),) * dim
        n = tuple(int(np.ceil(e / spacing - 1e-9)) for e in extent)
        n = tuple(ni + (ni % 2) for ni in n)
        origin = tuple(-ni * spacing / 2.0 for ni in n)
        return GridSpec(dim=dim, origin=origin, n=n, spacing=spacing)


@dataclass
class ScalarField:
    """Node values plus ghost layer.  ``values`` includes ghosts on every axis.

    Fields are treated as immutable once handed to a stencil operation; all
    operations below return fresh fields.
    """

    grid: GridSpec
    values: NDArray[np.float64]
    ghost_width: int = GHOST_WIDTH

    def __post_init__(self):
        expected = tuple(s + 2 * self.ghost_width for s in self.grid.shape)
        if self.values.shape != expected:
            raise ConfigurationError(
                f"field shape {self.values.shape} does not match grid "
                f"(expected {expected} including ghost width {self.ghost_width})"
            )
        if self.ghost_width < GHOST_WIDTH:
            raise ConfigurationError(f"ghost_width must be >= {GHOST_WIDTH}")

    @property
    def interior(self) -> NDArray[np.float64]:
        g = self.ghost_width
        return self.values[(slice(g, -g),) * self.grid.dim]

    @classmethod
    def from_interior(
        cls,
        grid: GridSpec,
        interior: NDArray[np.float64],
        rule: str = "linear",
        ghost_width: int = GHOST_WIDTH,
    ) -> "ScalarField":
        """Wrap interior node values and fill the ghost layer with ``rule``."""
        if interior.shape != grid.shape:
            raise ConfigurationError(
                f"interior shape {interior.shape} does not match grid nodes {grid.shape}"
            )
        full = np.empty(tuple(s + 2 * ghost_width for s in grid.shape))
        g = ghost_width
        full[(slice(g, -g),) * grid.dim] = interior
        out = cls(grid=grid, values=full, ghost_width=ghost_width)
        _fill_ghost_inplace(out.values, grid.dim, ghost_width, rule)
        return out

    @classmethod
    def full_like(cls, other: "ScalarField", fill: float) -> "ScalarField":
        return cls(
            grid=other.grid,
            values=np.full_like(other.values, fill),
            ghost_width=other.ghost_width,
        )

    def with_interior(self, interior: NDArray[np.float64], rule: str = "linear") -> "ScalarField":
        return ScalarField.from_interior(self.grid, interior, rule, self.ghost_width)

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy(), self.ghost_width)


@dataclass
class BandMask:
    """Nodes within ``half_width`` grid spacings of the zero contour."""

    grid: GridSpec
    mask: NDArray[np.bool_]
    half_width: float

    @property
    def count(self) -> int:
        return int(self.mask.sum())


def _fill_axis(values: np.ndarray, axis: int, g: int, rule: str) -> None:
    sl = [slice(None)] * values.ndim

    def take(idx: int) -> np.ndarray:
        s = list(sl)
        s[axis] = idx
        return values[tuple(s)]

    n_full = values.shape[axis]
    if rule == "linear":
        for m in range(1, g + 1):
            take(g - m)[...] = (1 + m) * take(g) - m * take(g + 1)
            take(n_full - 1 - g + m)[...] = (1 + m) * take(n_full - 1 - g) - m * take(
                n_full - 2 - g
            )
    elif rule == "zero_gradient":
        for m in range(1, g + 1):
            take(g - m)[...] = take(g)
            take(n_full - 1 - g + m)[...] = take(n_full - 1 - g)
    else:
        raise ConfigurationError(
            f"unknown boundary rule {rule!r}; expected one of {_RULES}"
        )


def _fill_ghost_inplace(values: np.ndarray, dim: int, g: int, rule: str) -> None:
    for axis in range(dim):
        _fill_axis(values, axis, g, rule)


def fill_ghost(field: ScalarField, rule: str = "linear") -> ScalarField:
    """Return a field with ghost nodes repopulated from the interior.

    Idempotent: ghosts are a pure function of interior values.
    """
    out = field.copy()
    _fill_ghost_inplace(out.values, field.grid.dim, field.ghost_width, rule)
    return out


def _central_gradient_magnitude(interior: np.ndarray, h: float) -> np.ndarray:
    """|grad| by one-sided-at-edges central differences, interior array only."""
    mag2 = np.zeros_like(interior)
    for axis in range(interior.ndim):
        d = np.gradient(interior, h, axis=axis)
        mag2 += d * d
    return np.sqrt(mag2)


def has_sign_change(interior: np.ndarray) -> bool:
    vmin = float(np.min(interior))
    vmax = float(np.max(interior))
    return vmin < 0.0 <= vmax or (vmin <= 0.0 < vmax)


def _sign_change_adjacent(interior: np.ndarray) -> np.ndarray:
    """Nodes adjacent (face-wise) to a sign change of the field."""
    neg = interior < 0.0
    adj = np.zeros(interior.shape, dtype=bool)
    for axis in range(interior.ndim):
        lo = [slice(None)] * interior.ndim
        hi = [slice(None)] * interior.ndim
        lo[axis] = slice(None, -1)
        hi[axis] = slice(1, None)
        flip = neg[tuple(lo)] != neg[tuple(hi)]
        adj[tuple(lo)] |= flip
        adj[tuple(hi)] |= flip
    return adj


def band_of(field: ScalarField, beta: float) -> BandMask:
    """Nodes with |field| <= beta * dx * max(1, |grad field|), plus every node
    adjacent to a sign change.

    ``beta`` is in multiples of the grid spacing.  The gradient factor makes
    the band metric-aware when the field has drifted from a signed distance
    function.
    """
    interior = field.interior
    if not has_sign_change(interior):
        raise EmptyInterfaceError("field has no zero crossing; band is undefined")
    h = field.grid.spacing
    scale = np.maximum(1.0, _central_gradient_magnitude(interior, h))
    mask = np.abs(interior) <= beta * h * scale
    mask |= _sign_change_adjacent(interior)
    return BandMask(grid=field.grid, mask=mask, half_width=beta)


def write_field_txt(field: ScalarField, path: str | Path) -> Path:
    """Plain-text matrix snapshot: one row per x grid line (3D: blank-line
    separated blocks, one per z index)."""
    path = Path(path)
    interior = field.interior
    with open(path, "w") as f:
        if field.grid.dim == 2:
            np.savetxt(f, interior, fmt="%.17g")
        else:
            for k in range(interior.shape[2]):
                np.savetxt(f, interior[:, :, k], fmt="%.17g")
                f.write("\n")
    return path


def write_field_vtk(field: ScalarField, path: str | Path, name: str = "field") -> Path:
    """Legacy-VTK structured-points snapshot (ASCII)."""
    path = Path(path)
    grid = field.grid
    interior = field.interior
    shape = grid.shape + (1,) * (3 - grid.dim)
    origin = grid.origin + (0.0,) * (3 - grid.dim)
    with open(path, "w") as f:
        f.write("# vtk DataFile Version 3.0\n")
        f.write(f"{name}\n")
        f.write("ASCII\nDATASET STRUCTURED_POINTS\n")
        f.write(f"DIMENSIONS {shape[0]} {shape[1]} {shape[2]}\n")
        f.write(f"ORIGIN {origin[0]:.17g} {origin[1]:.17g} {origin[2]:.17g}\n")
        f.write(f"SPACING {grid.spacing:.17g} {grid.spacing:.17g} {grid.spacing:.17g}\n")
        f.write(f"POINT_DATA {interior.size}\n")
        f.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
        # VTK expects x varying fastest
        flat = np.transpose(interior).ravel()
        np.savetxt(f, flat, fmt="%.17g")
    return path


def write_snapshot(
    field: ScalarField,
    run_dir: str | Path,
    fieldname: str,
    stepindex: int,
    fmt: str = "txt",
) -> Path:
    """Write ``<run>/<fieldname>_<stepindex>.{txt,vtk}``."""
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    if fmt == "txt":
        return write_field_txt(field, run_dir / f"{fieldname}_{stepindex:06d}.txt")
    if fmt == "vtk":
        return write_field_vtk(
            field, run_dir / f"{fieldname}_{stepindex:06d}.vtk", name=fieldname
        )
    raise ConfigurationError(f"unknown snapshot format {fmt!r}; expected txt or vtk")
