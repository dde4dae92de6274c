"""Spatial discretisations on ghosted fields.

One-sided fifth-order HJ-WENO derivatives, upwinded gradients keyed on
V n_i, the Godunov numerical |grad phi|, limiting-normal averaging,
clamped signed curvature, and the Laplace-Beltrami decomposition

    lap_S(V) = lap(V) - div(n) (n.grad V) - n^T H(V) n.

Sign conventions: phi < 0 inside the tissue, n = grad phi/|grad phi|
points outward, and kappa = div(n)/(d-1) is positive where the tissue
substrate is convex.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from curveflow import _kernels as K
from curveflow.grid import ScalarField

_WENO_2D = (K.weno_pair_2d_x, K.weno_pair_2d_y)
_WENO_3D = (K.weno_pair_3d_x, K.weno_pair_3d_y, K.weno_pair_3d_z)


@dataclass
class DerivativePair:
    """Backward (minus) and forward (plus) one-sided derivatives, per node."""

    minus: NDArray[np.float64]
    plus: NDArray[np.float64]


@dataclass
class NormalField:
    """Unit normals per node; ``components[a]`` is the a-th component array."""

    components: tuple[NDArray[np.float64], ...]

    @property
    def dim(self) -> int:
        return len(self.components)


@dataclass
class CurvatureField:
    """Signed curvature (1/(d-1)) div(n): ``clamped`` to +/- 1/dx, plus the raw value."""

    clamped: NDArray[np.float64]
    raw: NDArray[np.float64]
    bound: float


def weno5_pair(field: ScalarField, axis: int) -> DerivativePair:
    """Fifth-order one-sided derivatives along ``axis`` at every interior node.

    Requires filled ghosts.  Exact (to round-off) for linear fields on both
    branches; degrades to lower order without oscillation across kinks.
    """
    dim = field.grid.dim
    kernels = _WENO_2D if dim == 2 else _WENO_3D
    minus = np.empty(field.grid.shape)
    plus = np.empty(field.grid.shape)
    kernels[axis](field.values, field.grid.spacing, minus, plus)
    return DerivativePair(minus=minus, plus=plus)


def weno5_pairs(field: ScalarField) -> tuple[DerivativePair, ...]:
    return tuple(weno5_pair(field, a) for a in range(field.grid.dim))


def upwind_gradient(
    field: ScalarField,
    V: NDArray[np.float64],
    n: NormalField,
    pairs: tuple[DerivativePair, ...] | None = None,
) -> tuple[NDArray[np.float64], ...]:
    """Gradient with per-axis branch selection on the advection speed V n_i:
    backward where V n_i > 0, forward where V n_i <= 0."""
    if pairs is None:
        pairs = weno5_pairs(field)
    out = []
    for a, pair in enumerate(pairs):
        out.append(np.where(V * n.components[a] > 0.0, pair.minus, pair.plus))
    return tuple(out)


def godunov_hamiltonian(
    field: ScalarField,
    v_sign: NDArray[np.float64],
    pairs: tuple[DerivativePair, ...] | None = None,
) -> NDArray[np.float64]:
    """Godunov numerical |grad field| for transport at speed sign ``v_sign``."""
    if pairs is None:
        pairs = weno5_pairs(field)
    out = np.empty(field.grid.shape)
    vsign = np.broadcast_to(np.asarray(v_sign, dtype=np.float64), out.shape)
    vsign = np.ascontiguousarray(vsign)
    if field.grid.dim == 2:
        K.godunov_mag_2d(pairs[0].minus, pairs[0].plus, pairs[1].minus, pairs[1].plus, vsign, out)
    else:
        K.godunov_mag_3d(
            pairs[0].minus, pairs[0].plus,
            pairs[1].minus, pairs[1].plus,
            pairs[2].minus, pairs[2].plus,
            vsign, out,
        )
    return out


def averaged_normal(
    field: ScalarField,
    pairs: tuple[DerivativePair, ...] | None = None,
    prev: NormalField | None = None,
) -> NormalField:
    """Unit normal by normalising the average of the 2^d one-sided limiting
    normals.  Degenerate nodes (average below 1e-12) keep the previous
    step's normal, or e_x when no history exists."""
    if pairs is None:
        pairs = weno5_pairs(field)
    shape = field.grid.shape
    dim = field.grid.dim
    if prev is None:
        comps_prev = [np.zeros(shape) for _ in range(dim)]
        comps_prev[0][...] = 1.0
    else:
        comps_prev = [np.ascontiguousarray(c) for c in prev.components]
    comps = tuple(np.empty(shape) for _ in range(dim))
    if dim == 2:
        K.averaged_normal_2d(
            pairs[0].minus, pairs[0].plus, pairs[1].minus, pairs[1].plus,
            comps_prev[0], comps_prev[1], comps[0], comps[1],
        )
    else:
        K.averaged_normal_3d(
            pairs[0].minus, pairs[0].plus,
            pairs[1].minus, pairs[1].plus,
            pairs[2].minus, pairs[2].plus,
            comps_prev[0], comps_prev[1], comps_prev[2],
            comps[0], comps[1], comps[2],
        )
    return NormalField(components=comps)


def curvature(field: ScalarField) -> CurvatureField:
    """Signed curvature kappa = (1/(d-1)) div(grad phi/|grad phi|), central
    differences, clamped to +/- 1/dx.

    2D uses the closed formula (phi_y^2 phi_xx - 2 phi_x phi_y phi_xy +
    phi_x^2 phi_yy)/|grad phi|^3 with the denominator floored at 1e-12;
    3D takes the central divergence of the normalised central gradient.
    """
    h = field.grid.spacing
    shape = field.grid.shape
    raw = np.empty(shape)
    clamped = np.empty(shape)
    if field.grid.dim == 2:
        K.curvature_2d(field.values, h, raw, clamped)
    else:
        ring = tuple(s + 2 for s in shape)
        n1 = np.empty(ring)
        n2 = np.empty(ring)
        n3 = np.empty(ring)
        K.normal_central_3d(field.values, h, n1, n2, n3)
        K.curvature_3d(n1, n2, n3, h, raw, clamped)
    return CurvatureField(clamped=clamped, raw=raw, bound=1.0 / h)


def central_gradient(field: ScalarField) -> tuple[NDArray[np.float64], ...]:
    """Second-order central first derivatives at interior nodes (uses ghosts)."""
    g = field.ghost_width
    u = field.values
    h = field.grid.spacing
    dim = field.grid.dim
    out = []
    core = tuple(slice(g, -g) for _ in range(dim))
    for a in range(dim):
        lo = list(core)
        hi = list(core)
        lo[a] = slice(g - 1, -g - 1)
        hi[a] = slice(g + 1, None if g == 1 else -g + 1)
        out.append((u[tuple(hi)] - u[tuple(lo)]) / (2.0 * h))
    return tuple(out)


def central_hessian(field: ScalarField) -> dict[tuple[int, int], NDArray[np.float64]]:
    """Central second derivatives: H[(a,b)] for a <= b (mixed terms by the
    four-corner formula)."""
    g = field.ghost_width
    u = field.values
    h = field.grid.spacing
    dim = field.grid.dim
    core = tuple(slice(g, -g) for _ in range(dim))
    H: dict[tuple[int, int], NDArray[np.float64]] = {}

    def shifted(offsets: dict[int, int]) -> NDArray[np.float64]:
        s = list(core)
        for a, off in offsets.items():
            s[a] = slice(g + off, None if g - off == 0 else -(g - off))
        return u[tuple(s)]

    centre = u[core]
    for a in range(dim):
        H[(a, a)] = (shifted({a: 1}) - 2.0 * centre + shifted({a: -1})) / (h * h)
        for b in range(a + 1, dim):
            H[(a, b)] = (
                shifted({a: 1, b: 1}) - shifted({a: -1, b: 1})
                - shifted({a: 1, b: -1}) + shifted({a: -1, b: -1})
            ) / (4.0 * h * h)
    return H


def laplace_beltrami(
    V: ScalarField,
    n: NormalField,
    kappa_raw: NDArray[np.float64],
) -> NDArray[np.float64]:
    """Surface Laplacian extension lap(V) - div(n)(n.grad V) - n^T H(V) n,
    with div(n) = (d-1) kappa_raw and central-difference derivatives.

    The three pieces reassemble to the full central Laplacian node-wise to
    round-off, which is the identity the tests pin down.
    """
    dim = V.grid.dim
    grad = central_gradient(V)
    H = central_hessian(V)
    lap = sum(H[(a, a)] for a in range(dim))
    div_n = (dim - 1) * kappa_raw
    n_dot_grad = sum(n.components[a] * grad[a] for a in range(dim))
    nhn = np.zeros(V.grid.shape)
    for a in range(dim):
        nhn += n.components[a] ** 2 * H[(a, a)]
        for b in range(a + 1, dim):
            nhn += 2.0 * n.components[a] * n.components[b] * H[(a, b)]
    return lap - div_n * n_dot_grad - nhn
