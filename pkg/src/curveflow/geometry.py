"""Initial-condition geometry, interface extraction, and diagnostics.

Shapes are built as signed distance functions with the standard
negative-inside convention; the ``tissue_inside`` flag orients the field
physically (phi < 0 inside the tissue).  A shape with
``tissue_inside=False`` describes a pore: the interior is void, the
surrounding material is tissue, and the stored field is the sign-flipped
SDF.

The zero contour is extracted by marching squares (2D, saddle cells
resolved by the sign of the cell-centre average) or marching cubes (3D,
scikit-image), with per-vertex velocity by multilinear interpolation.
The normalised cell number is the line/surface integral of the interface
velocity:

    N(t)/N0 = (1/(|v0| S0)) integral_S(t) V dl.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np
from numpy.typing import NDArray
from scipy import ndimage
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from curveflow.errors import ConfigurationError
from curveflow.grid import GridSpec, ScalarField
from curveflow.levelset import ReinitControls, reinitialize


# -- Shape specification -------------------------------------------------------


@dataclass(frozen=True)
class ShapeSpec:
    """Parametric initial interface.

    kind: circle | regular_polygon | multi_circle | image_mask | sphere.
    ``tissue_inside`` orients the signed distance: True (default) puts the
    tissue where the shape interior is (phi < 0 there); False describes a
    pore cut out of surrounding tissue (phi flipped).
    """

    kind: str
    radius: float = 0.0
    sides: int = 0
    side: float = 0.0
    rotation_deg: float = 0.0
    centers: tuple[tuple[float, ...], ...] = ()
    radii: tuple[float, ...] = ()
    image_path: str = ""
    pixel_size: float = 0.0
    threshold: float = 0.5
    tissue_inside: bool = True

    @staticmethod
    def circle(radius: float, tissue_inside: bool = True) -> "ShapeSpec":
        if radius <= 0:
            raise ConfigurationError("circle radius must be positive")
        return ShapeSpec(kind="circle", radius=radius, tissue_inside=tissue_inside)

    @staticmethod
    def sphere(radius: float, tissue_inside: bool = True) -> "ShapeSpec":
        if radius <= 0:
            raise ConfigurationError("sphere radius must be positive")
        return ShapeSpec(kind="sphere", radius=radius, tissue_inside=tissue_inside)

    @staticmethod
    def regular_polygon(
        sides: int,
        side: float = 0.0,
        perimeter: float = 0.0,
        rotation_deg: float = 0.0,
        tissue_inside: bool = True,
    ) -> "ShapeSpec":
        if sides < 3:
            raise ConfigurationError("polygon needs at least 3 sides")
        if (side <= 0) == (perimeter <= 0):
            raise ConfigurationError("give exactly one of side or perimeter")
        if perimeter > 0:
            side = perimeter / sides
        return ShapeSpec(
            kind="regular_polygon",
            sides=sides,
            side=side,
            rotation_deg=rotation_deg,
            tissue_inside=tissue_inside,
        )

    @staticmethod
    def multi_circle(
        centers: list[tuple[float, ...]],
        radii: list[float],
        tissue_inside: bool = True,
    ) -> "ShapeSpec":
        if len(centers) != len(radii) or not centers:
            raise ConfigurationError("centers and radii must pair up, non-empty")
        if any(r <= 0 for r in radii):
            raise ConfigurationError("all radii must be positive")
        return ShapeSpec(
            kind="multi_circle",
            centers=tuple(tuple(c) for c in centers),
            radii=tuple(radii),
            tissue_inside=tissue_inside,
        )

    @staticmethod
    def image_mask(
        path: str,
        pixel_size: float,
        threshold: float = 0.5,
        tissue_inside: bool = True,
    ) -> "ShapeSpec":
        if pixel_size <= 0:
            raise ConfigurationError("pixel_size must be positive")
        if not 0.0 < threshold < 1.0:
            raise ConfigurationError("threshold must lie in (0, 1)")
        return ShapeSpec(
            kind="image_mask",
            image_path=path,
            pixel_size=pixel_size,
            threshold=threshold,
            tissue_inside=tissue_inside,
        )

    def polygon_vertices(self) -> NDArray[np.float64]:
        """Vertices of the regular polygon, one edge facing -y, optional
        extra rotation."""
        m = self.sides
        r_circ = self.side / (2.0 * np.sin(np.pi / m))
        offset = np.pi / m + np.pi / 2.0 + np.deg2rad(self.rotation_deg)
        ang = 2.0 * np.pi * np.arange(m) / m + offset
        return np.column_stack([r_circ * np.cos(ang), r_circ * np.sin(ang)])

    def bounding_box(self) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        """(min_corner, max_corner) of the shape in mm."""
        if self.kind in ("circle", "sphere"):
            d = 2 if self.kind == "circle" else 3
            r = np.full(d, self.radius)
            return -r, r
        if self.kind == "regular_polygon":
            v = self.polygon_vertices()
            return v.min(axis=0), v.max(axis=0)
        if self.kind == "multi_circle":
            c = np.asarray(self.centers)
            r = np.asarray(self.radii)[:, None]
            return (c - r).min(axis=0), (c + r).max(axis=0)
        if self.kind == "image_mask":
            # the relevant footprint is the minority phase (the structure
            # against its background), not the image frame
            arr = load_mask_image(self.image_path)
            inside = arr >= self.threshold * max(arr.max(), 1e-300)
            figure = inside if inside.mean() <= 0.5 else ~inside
            if not figure.any():
                half = 0.5 * self.pixel_size * np.array(arr.shape, dtype=float)
                return -half, half
            ii, jj = np.nonzero(figure)
            centre = 0.5 * (np.array(arr.shape, dtype=float) - 1.0)
            lo = (np.array([ii.min(), jj.min()]) - centre) * self.pixel_size
            hi = (np.array([ii.max(), jj.max()]) - centre) * self.pixel_size
            return lo, hi
        raise ConfigurationError(f"unknown shape kind {self.kind!r}")


def load_mask_image(path: str | Path) -> NDArray[np.float64]:
    """8-bit grayscale PNG or whitespace-delimited text matrix -> float array
    in [0, 1], row index = x, column index = y."""
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"mask image not found: {path}")
    if path.suffix.lower() == ".png":
        from PIL import Image

        with Image.open(path) as im:
            arr = np.asarray(im.convert("L"), dtype=float) / 255.0
        # image rows run top-down along y; flip to y-up and put x on axis 0
        return np.ascontiguousarray(arr[::-1, :].T)
    arr = np.loadtxt(path, dtype=float)
    mx = arr.max()
    return arr / mx if mx > 0 else arr


def _polygon_sdf(vertices: NDArray[np.float64], x, y) -> NDArray[np.float64]:
    """Exact signed distance to a convex polygon (negative inside)."""
    m = len(vertices)
    dist = np.full(np.broadcast(x, y).shape, np.inf)
    inside = np.ones(np.broadcast(x, y).shape, dtype=bool)
    for i in range(m):
        a = vertices[i]
        b = vertices[(i + 1) % m]
        e = b - a
        px = x - a[0]
        py = y - a[1]
        t = np.clip((px * e[0] + py * e[1]) / (e @ e), 0.0, 1.0)
        dist = np.minimum(dist, np.hypot(px - t * e[0], py - t * e[1]))
        # interior test: consistently on the left of every (CCW) edge
        inside &= (e[0] * py - e[1] * px) >= 0.0
    return np.where(inside, -dist, dist)


def build_sdf(
    shape: ShapeSpec,
    grid: GridSpec,
    boundary_rule: str = "linear",
    reinit_controls: ReinitControls | None = None,
    reinit_mask: bool = True,
) -> ScalarField:
    """Signed distance field of the initial interface on ``grid``.

    Analytic for circles, spheres, regular polygons and circle unions
    (min over bodies); image masks are thresholded to a +/-1 indicator and
    relaxed to a signed distance function in a 20 dx band.  Raises when
    the shape does not leave a 50% margin to the domain edge.
    """
    _check_margin(shape, grid)
    mesh = grid.meshgrid()

    if shape.kind == "circle" and grid.dim == 2:
        sdf = np.hypot(mesh[0], mesh[1]) - shape.radius
    elif shape.kind == "sphere" and grid.dim == 3:
        sdf = np.sqrt(sum(c * c for c in mesh)) - shape.radius
    elif shape.kind == "regular_polygon" and grid.dim == 2:
        sdf = _polygon_sdf(shape.polygon_vertices(), mesh[0], mesh[1])
    elif shape.kind == "multi_circle" and grid.dim == 2:
        sdf = np.full(grid.shape, np.inf)
        for (cx, cy), r in zip(shape.centers, shape.radii):
            sdf = np.minimum(sdf, np.hypot(mesh[0] - cx, mesh[1] - cy) - r)
    elif shape.kind == "image_mask" and grid.dim == 2:
        sdf = _mask_indicator(shape, grid, mesh)
    else:
        raise ConfigurationError(
            f"shape {shape.kind!r} is not available in {grid.dim}D"
        )

    if not shape.tissue_inside:
        sdf = -sdf
    out = ScalarField.from_interior(grid, sdf, rule=boundary_rule)

    if shape.kind == "image_mask" and reinit_mask:
        controls = reinit_controls or ReinitControls(
            epsilon_reinit=5.0, beta=20.0, max_iters=2000
        )
        out = reinitialize(out, controls, boundary_rule=boundary_rule).field
    return out


def _mask_indicator(shape: ShapeSpec, grid: GridSpec, mesh) -> NDArray[np.float64]:
    arr = load_mask_image(shape.image_path)
    nx, ny = arr.shape
    # mask centred on the domain origin, bilinear sampling in pixel space
    px = (mesh[0] - 0.0) / shape.pixel_size + 0.5 * (nx - 1)
    py = (mesh[1] - 0.0) / shape.pixel_size + 0.5 * (ny - 1)
    sampled = ndimage.map_coordinates(
        arr, np.stack([px.ravel(), py.ravel()]), order=1, mode="nearest"
    ).reshape(grid.shape)
    inside = sampled >= shape.threshold
    if not inside.any() or inside.all():
        raise ConfigurationError("mask thresholding produced no interface")
    # indicator scaled to half a cell: the nearest interface from an
    # interface-adjacent node is within one cell, and the re-initialisation
    # band criterion can see these nodes immediately
    return np.where(inside, -0.5 * grid.spacing, 0.5 * grid.spacing)


def _check_margin(shape: ShapeSpec, grid: GridSpec) -> None:
    lo, hi = shape.bounding_box()
    if len(lo) != grid.dim:
        raise ConfigurationError(
            f"{shape.kind} is {len(lo)}D but the grid is {grid.dim}D"
        )
    for a in range(grid.dim):
        span = hi[a] - lo[a]
        dom_lo = grid.origin[a]
        dom_hi = grid.origin[a] + grid.extent[a]
        if lo[a] - dom_lo < 0.25 * span - 1e-12 or dom_hi - hi[a] < 0.25 * span - 1e-12:
            raise ConfigurationError(
                f"shape with extent {span:.4g} mm along axis {a} does not keep a "
                f"50% margin inside the domain [{dom_lo:.4g}, {dom_hi:.4g}]"
            )


# -- Interface extraction ------------------------------------------------------


@dataclass
class InterfaceSample:
    """Extracted zero contour: vertex coordinates (mm), segment or triangle
    connectivity, interpolated velocity per vertex, component labels."""

    vertices: NDArray[np.float64]  # (n_vert, dim)
    connectivity: NDArray[np.int64]  # (n_elem, 2) segments or (n_elem, 3) triangles
    v_interp: NDArray[np.float64]  # (n_vert,)
    labels: NDArray[np.int64]  # (n_vert,) connected-component ids

    @property
    def is_empty(self) -> bool:
        return len(self.vertices) == 0

    @property
    def n_components(self) -> int:
        return 0 if self.is_empty else int(self.labels.max()) + 1

    def measure(self) -> float:
        """Total polyline length (2D) or triangulated area (3D)."""
        if self.is_empty:
            return 0.0
        pts = self.vertices[self.connectivity]
        if self.connectivity.shape[1] == 2:
            return float(np.linalg.norm(pts[:, 1] - pts[:, 0], axis=1).sum())
        cross = np.cross(pts[:, 1] - pts[:, 0], pts[:, 2] - pts[:, 0])
        return float(0.5 * np.linalg.norm(cross, axis=1).sum())


_EMPTY_2D = InterfaceSample(
    vertices=np.zeros((0, 2)),
    connectivity=np.zeros((0, 2), dtype=np.int64),
    v_interp=np.zeros(0),
    labels=np.zeros(0, dtype=np.int64),
)

# marching-squares segment table: case index bit k = corner k is inside
# (phi < 0), corners ordered (i,j), (i+1,j), (i+1,j+1), (i,j+1); edges
# 0:(c0,c1) 1:(c1,c2) 2:(c2,c3) 3:(c3,c0).  Saddles (cases 5, 10) are
# resolved at runtime by the cell-centre average.
_MS_SEGMENTS: dict[int, tuple[tuple[int, int], ...]] = {
    0: (),
    1: ((3, 0),),
    2: ((0, 1),),
    3: ((3, 1),),
    4: ((1, 2),),
    6: ((0, 2),),
    7: ((3, 2),),
    8: ((2, 3),),
    9: ((2, 0),),
    11: ((2, 1),),
    12: ((1, 3),),
    13: ((1, 0),),
    14: ((0, 3),),
    15: (),
}


def _edge_crossing(pa, pb, fa, fb):
    t = fa / (fa - fb)
    return pa + t * (pb - pa)


def _marching_squares(
    phi: NDArray[np.float64], grid: GridSpec
) -> tuple[NDArray[np.float64], NDArray[np.int64]]:
    """Oriented zero-contour segments; vertices deduplicated by grid edge."""
    h = grid.spacing
    neg = phi < 0.0
    nx, ny = phi.shape
    c0 = neg[:-1, :-1]
    c1 = neg[1:, :-1]
    c2 = neg[1:, 1:]
    c3 = neg[:-1, 1:]
    case = (
        c0.astype(np.int8)
        + 2 * c1.astype(np.int8)
        + 4 * c2.astype(np.int8)
        + 8 * c3.astype(np.int8)
    )
    ii, jj = np.nonzero((case > 0) & (case < 15))
    if len(ii) == 0:
        return np.zeros((0, 2)), np.zeros((0, 2), dtype=np.int64)

    # unique key per grid edge: horizontal edges (axis 0) and vertical (axis 1)
    vert_ids: dict[tuple[int, int, int], int] = {}
    verts: list[np.ndarray] = []
    segments: list[tuple[int, int]] = []

    def vertex_on_edge(i: int, j: int, edge: int) -> int:
        if edge == 0:
            key = (0, i, j)
            pa = np.array([grid.origin[0] + i * h, grid.origin[1] + j * h])
            pb = pa + np.array([h, 0.0])
            fa, fb = phi[i, j], phi[i + 1, j]
        elif edge == 1:
            key = (1, i + 1, j)
            pa = np.array([grid.origin[0] + (i + 1) * h, grid.origin[1] + j * h])
            pb = pa + np.array([0.0, h])
            fa, fb = phi[i + 1, j], phi[i + 1, j + 1]
        elif edge == 2:
            key = (0, i, j + 1)
            pa = np.array([grid.origin[0] + i * h, grid.origin[1] + (j + 1) * h])
            pb = pa + np.array([h, 0.0])
            fa, fb = phi[i, j + 1], phi[i + 1, j + 1]
        else:
            key = (1, i, j)
            pa = np.array([grid.origin[0] + i * h, grid.origin[1] + j * h])
            pb = pa + np.array([0.0, h])
            fa, fb = phi[i, j], phi[i, j + 1]
        idx = vert_ids.get(key)
        if idx is None:
            idx = len(verts)
            vert_ids[key] = idx
            verts.append(_edge_crossing(pa, pb, fa, fb))
        return idx

    for i, j in zip(ii, jj):
        c = int(case[i, j])
        if c in (5, 10):
            centre = 0.25 * (
                phi[i, j] + phi[i + 1, j] + phi[i + 1, j + 1] + phi[i, j + 1]
            )
            join = centre < 0.0
            if c == 5:  # corners 0 and 2 inside
                segs = ((3, 2), (1, 0)) if join else ((3, 0), (1, 2))
            else:  # corners 1 and 3 inside
                segs = ((0, 3), (2, 1)) if join else ((0, 1), (2, 3))
        else:
            segs = _MS_SEGMENTS[c]
        for ea, eb in segs:
            segments.append((vertex_on_edge(i, j, ea), vertex_on_edge(i, j, eb)))

    return np.array(verts), np.array(segments, dtype=np.int64)


def _component_labels(n_verts: int, conn: NDArray[np.int64]) -> NDArray[np.int64]:
    if n_verts == 0:
        return np.zeros(0, dtype=np.int64)
    rows = np.concatenate([conn[:, k] for k in range(conn.shape[1])])
    cols = np.concatenate(
        [conn[:, (k + 1) % conn.shape[1]] for k in range(conn.shape[1])]
    )
    adj = coo_matrix(
        (np.ones(len(rows)), (rows, cols)), shape=(n_verts, n_verts)
    )
    _, labels = connected_components(adj, directed=False)
    # relabel in first-appearance order for determinism
    order: dict[int, int] = {}
    out = np.empty(n_verts, dtype=np.int64)
    for i, lab in enumerate(labels):
        out[i] = order.setdefault(int(lab), len(order))
    return out


def _interp_at(
    values: NDArray[np.float64], grid: GridSpec, points: NDArray[np.float64]
) -> NDArray[np.float64]:
    coords = [
        (points[:, a] - grid.origin[a]) / grid.spacing for a in range(grid.dim)
    ]
    return ndimage.map_coordinates(values, np.stack(coords), order=1, mode="nearest")


def extract_interface(phi: ScalarField, V: ScalarField | None = None) -> InterfaceSample:
    """Zero contour of phi with per-vertex velocity.

    Returns an empty sample (not an error) when phi has no zero crossing:
    that is the signal for total closure or fragmentation loss.
    """
    interior = phi.interior
    grid = phi.grid
    if grid.dim == 2:
        verts, conn = _marching_squares(interior, grid)
    else:
        verts, conn = _marching_cubes(interior, grid)
    if len(verts) == 0:
        if grid.dim == 2:
            return _EMPTY_2D
        return InterfaceSample(
            vertices=np.zeros((0, 3)),
            connectivity=np.zeros((0, 3), dtype=np.int64),
            v_interp=np.zeros(0),
            labels=np.zeros(0, dtype=np.int64),
        )
    v_interp = (
        _interp_at(V.interior, grid, verts) if V is not None else np.zeros(len(verts))
    )
    labels = _component_labels(len(verts), conn)
    return InterfaceSample(
        vertices=verts, connectivity=conn, v_interp=v_interp, labels=labels
    )


def _marching_cubes(
    phi: NDArray[np.float64], grid: GridSpec
) -> tuple[NDArray[np.float64], NDArray[np.int64]]:
    from skimage.measure import marching_cubes

    if phi.min() >= 0.0 or phi.max() < 0.0:
        return np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64)
    verts, faces, _, _ = marching_cubes(
        phi, level=0.0, spacing=(grid.spacing,) * 3
    )
    verts = verts + np.asarray(grid.origin)
    return verts.astype(float), faces.astype(np.int64)


# -- Diagnostics ---------------------------------------------------------------


@dataclass
class DiagnosticsRecord:
    t: float
    N_ratio: float
    interface_measure: float
    V_min: float
    V_max: float
    cfl: float
    n_components: int = 0


def cell_number(sample: InterfaceSample, v0: float, S0: float) -> float:
    """Normalised cell number: integral of V over the interface divided by
    |v0| S0 (trapezoidal on segments, vertex-mean on triangles)."""
    if S0 <= 0.0:
        raise ConfigurationError(f"S0 must be positive, got {S0}")
    if sample.is_empty:
        return 0.0
    pts = sample.vertices[sample.connectivity]
    vv = sample.v_interp[sample.connectivity]
    if sample.connectivity.shape[1] == 2:
        seg_len = np.linalg.norm(pts[:, 1] - pts[:, 0], axis=1)
        integral = float((0.5 * (vv[:, 0] + vv[:, 1]) * seg_len).sum())
    else:
        cross = np.cross(pts[:, 1] - pts[:, 0], pts[:, 2] - pts[:, 0])
        area = 0.5 * np.linalg.norm(cross, axis=1)
        integral = float((vv.mean(axis=1) * area).sum())
    return integral / (abs(v0) * S0)


# -- CSV output ----------------------------------------------------------------


def append_interface_csv(
    path: str | Path, t: float, sample: InterfaceSample, dim: int
) -> None:
    path = Path(path)
    new = not path.exists()
    with open(path, "a") as f:
        if new:
            coords = "x,y" if dim == 2 else "x,y,z"
            f.write(f"t,component_id,vertex_index,{coords},V\n")
        if sample.is_empty:
            return
        order = np.lexsort((np.arange(len(sample.vertices)), sample.labels))
        for idx in order:
            coords = ",".join(f"{c:.9g}" for c in sample.vertices[idx])
            f.write(
                f"{t:.9g},{sample.labels[idx]},{idx},{coords},{sample.v_interp[idx]:.9g}\n"
            )


def append_diagnostics_csv(path: str | Path, rec: DiagnosticsRecord) -> None:
    path = Path(path)
    new = not path.exists()
    with open(path, "a") as f:
        if new:
            f.write("t,N_ratio,interface_measure,V_min,V_max,cfl,n_components\n")
        f.write(
            f"{rec.t:.9g},{rec.N_ratio:.9g},{rec.interface_measure:.9g},"
            f"{rec.V_min:.9g},{rec.V_max:.9g},{rec.cfl:.9g},{rec.n_components}\n"
        )
