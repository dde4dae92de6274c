"""Hot numerical kernels (numba-compiled).

Everything here works on raw ndarrays: inputs carry a 3-node ghost layer
(``G = 3``) on every axis, outputs are interior-shaped.  The public API in
:mod:`curveflow.stencils` wraps these in field containers.

The WENO5 core follows the Hamilton-Jacobi construction of Jiang & Peng
(SIAM J. Sci. Comput. 21, 2000) with the scale-invariant smoothness
regularisation eps = 1e-6 * max(v_k^2) + 1e-99.  Weights are evaluated in
a product form that needs a single division per one-sided derivative; the
ratios are algebraically identical to the textbook alpha_k / sum(alpha).
"""

from __future__ import annotations

import numpy as np
from numba import njit

G = 3  # ghost width, fixed by the WENO5 stencil reach


@njit(inline="always")
def _weno_one_sided(v1, v2, v3, v4, v5):
    q1 = v1 / 3.0 - 7.0 * v2 / 6.0 + 11.0 * v3 / 6.0
    q2 = -v2 / 6.0 + 5.0 * v3 / 6.0 + v4 / 3.0
    q3 = v3 / 3.0 + 5.0 * v4 / 6.0 - v5 / 6.0
    s1 = 13.0 / 12.0 * (v1 - 2.0 * v2 + v3) ** 2 + 0.25 * (v1 - 4.0 * v2 + 3.0 * v3) ** 2
    s2 = 13.0 / 12.0 * (v2 - 2.0 * v3 + v4) ** 2 + 0.25 * (v2 - v4) ** 2
    s3 = 13.0 / 12.0 * (v3 - 2.0 * v4 + v5) ** 2 + 0.25 * (3.0 * v3 - 4.0 * v4 + v5) ** 2
    vmax = max(v1 * v1, v2 * v2, v3 * v3, v4 * v4, v5 * v5)
    # scale-invariant regularisation; the 1e-36 floor keeps the product-form
    # weights from underflowing to 0/0 on exactly flat data
    eps = 1e-6 * vmax + 1e-36
    t1 = (s1 + eps) ** 2
    t2 = (s2 + eps) ** 2
    t3 = (s3 + eps) ** 2
    a1 = 0.1 * t2 * t3
    a2 = 0.6 * t1 * t3
    a3 = 0.3 * t1 * t2
    return (a1 * q1 + a2 * q2 + a3 * q3) / (a1 + a2 + a3)


@njit(inline="always")
def _weno_pair_point(um3, um2, um1, u0, up1, up2, up3, inv_h):
    d0 = (um2 - um3) * inv_h
    d1 = (um1 - um2) * inv_h
    d2 = (u0 - um1) * inv_h
    d3 = (up1 - u0) * inv_h
    d4 = (up2 - up1) * inv_h
    d5 = (up3 - up2) * inv_h
    return _weno_one_sided(d0, d1, d2, d3, d4), _weno_one_sided(d5, d4, d3, d2, d1)


# -- WENO5 pairs, 2D ---------------------------------------------------------


@njit(cache=True)
def weno_pair_2d_x(u, h, minus, plus):
    nx, ny = minus.shape
    inv_h = 1.0 / h
    for i in range(nx):
        for j in range(ny):
            jj = j + G
            m, p = _weno_pair_point(
                u[i, jj], u[i + 1, jj], u[i + 2, jj], u[i + 3, jj],
                u[i + 4, jj], u[i + 5, jj], u[i + 6, jj], inv_h,
            )
            minus[i, j] = m
            plus[i, j] = p


@njit(cache=True)
def weno_pair_2d_y(u, h, minus, plus):
    nx, ny = minus.shape
    inv_h = 1.0 / h
    for i in range(nx):
        ii = i + G
        for j in range(ny):
            m, p = _weno_pair_point(
                u[ii, j], u[ii, j + 1], u[ii, j + 2], u[ii, j + 3],
                u[ii, j + 4], u[ii, j + 5], u[ii, j + 6], inv_h,
            )
            minus[i, j] = m
            plus[i, j] = p


# -- WENO5 pairs, 3D ---------------------------------------------------------


@njit(cache=True)
def weno_pair_3d_x(u, h, minus, plus):
    nx, ny, nz = minus.shape
    inv_h = 1.0 / h
    for i in range(nx):
        for j in range(ny):
            jj = j + G
            for k in range(nz):
                kk = k + G
                m, p = _weno_pair_point(
                    u[i, jj, kk], u[i + 1, jj, kk], u[i + 2, jj, kk], u[i + 3, jj, kk],
                    u[i + 4, jj, kk], u[i + 5, jj, kk], u[i + 6, jj, kk], inv_h,
                )
                minus[i, j, k] = m
                plus[i, j, k] = p


@njit(cache=True)
def weno_pair_3d_y(u, h, minus, plus):
    nx, ny, nz = minus.shape
    inv_h = 1.0 / h
    for i in range(nx):
        ii = i + G
        for j in range(ny):
            for k in range(nz):
                kk = k + G
                m, p = _weno_pair_point(
                    u[ii, j, kk], u[ii, j + 1, kk], u[ii, j + 2, kk], u[ii, j + 3, kk],
                    u[ii, j + 4, kk], u[ii, j + 5, kk], u[ii, j + 6, kk], inv_h,
                )
                minus[i, j, k] = m
                plus[i, j, k] = p


@njit(cache=True)
def weno_pair_3d_z(u, h, minus, plus):
    nx, ny, nz = minus.shape
    inv_h = 1.0 / h
    for i in range(nx):
        ii = i + G
        for j in range(ny):
            jj = j + G
            for k in range(nz):
                m, p = _weno_pair_point(
                    u[ii, jj, k], u[ii, jj, k + 1], u[ii, jj, k + 2], u[ii, jj, k + 3],
                    u[ii, jj, k + 4], u[ii, jj, k + 5], u[ii, jj, k + 6], inv_h,
                )
                minus[i, j, k] = m
                plus[i, j, k] = p


# -- Godunov |grad| ----------------------------------------------------------


@njit(inline="always")
def _godunov_axis(m, p, v_nonneg):
    # entropy-consistent branch selection for phi_t + V |grad phi| = 0
    if v_nonneg:
        a = m if m > 0.0 else 0.0
        b = p if p < 0.0 else 0.0
    else:
        a = m if m < 0.0 else 0.0
        b = p if p > 0.0 else 0.0
    aa = a * a
    bb = b * b
    return aa if aa > bb else bb


@njit(cache=True)
def godunov_mag_2d(mx, px, my, py, vsign, out):
    nx, ny = out.shape
    for i in range(nx):
        for j in range(ny):
            nonneg = vsign[i, j] >= 0.0
            s = _godunov_axis(mx[i, j], px[i, j], nonneg)
            s += _godunov_axis(my[i, j], py[i, j], nonneg)
            out[i, j] = np.sqrt(s)


@njit(cache=True)
def godunov_mag_3d(mx, px, my, py, mz, pz, vsign, out):
    nx, ny, nz = out.shape
    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                nonneg = vsign[i, j, k] >= 0.0
                s = _godunov_axis(mx[i, j, k], px[i, j, k], nonneg)
                s += _godunov_axis(my[i, j, k], py[i, j, k], nonneg)
                s += _godunov_axis(mz[i, j, k], pz[i, j, k], nonneg)
                out[i, j, k] = np.sqrt(s)


# -- Averaged unit normal ----------------------------------------------------


@njit(cache=True)
def averaged_normal_2d(mx, px, my, py, prev1, prev2, n1, n2):
    """Normalised average of the four one-sided limiting normals.

    Where the average is degenerate (|avg| < 1e-12) the previous normal is
    kept (prev arrays double as output defaults).
    """
    nx, ny = n1.shape
    for i in range(nx):
        for j in range(ny):
            s1 = 0.0
            s2 = 0.0
            for gx in (mx[i, j], px[i, j]):
                for gy in (my[i, j], py[i, j]):
                    mag = np.sqrt(gx * gx + gy * gy)
                    if mag > 1e-300:
                        s1 += gx / mag
                        s2 += gy / mag
            mag = np.sqrt(s1 * s1 + s2 * s2)
            if mag < 1e-12:
                n1[i, j] = prev1[i, j]
                n2[i, j] = prev2[i, j]
            else:
                n1[i, j] = s1 / mag
                n2[i, j] = s2 / mag


@njit(cache=True)
def averaged_normal_3d(mx, px, my, py, mz, pz, prev1, prev2, prev3, n1, n2, n3):
    nx, ny, nz = n1.shape
    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                s1 = 0.0
                s2 = 0.0
                s3 = 0.0
                for gx in (mx[i, j, k], px[i, j, k]):
                    for gy in (my[i, j, k], py[i, j, k]):
                        for gz in (mz[i, j, k], pz[i, j, k]):
                            mag = np.sqrt(gx * gx + gy * gy + gz * gz)
                            if mag > 1e-300:
                                s1 += gx / mag
                                s2 += gy / mag
                                s3 += gz / mag
                mag = np.sqrt(s1 * s1 + s2 * s2 + s3 * s3)
                if mag < 1e-12:
                    n1[i, j, k] = prev1[i, j, k]
                    n2[i, j, k] = prev2[i, j, k]
                    n3[i, j, k] = prev3[i, j, k]
                else:
                    n1[i, j, k] = s1 / mag
                    n2[i, j, k] = s2 / mag
                    n3[i, j, k] = s3 / mag


# -- Curvature ---------------------------------------------------------------


@njit(cache=True)
def curvature_2d(u, h, raw, clamped):
    """Signed curvature from central differences, kappa = div(grad u/|grad u|),
    via the closed 2D formula; clamp to +/- 1/h."""
    nx, ny = raw.shape
    inv2h = 0.5 / h
    invh2 = 1.0 / (h * h)
    inv4h2 = 0.25 / (h * h)
    kmax = 1.0 / h
    for i in range(nx):
        ii = i + G
        for j in range(ny):
            jj = j + G
            ux = (u[ii + 1, jj] - u[ii - 1, jj]) * inv2h
            uy = (u[ii, jj + 1] - u[ii, jj - 1]) * inv2h
            uxx = (u[ii + 1, jj] - 2.0 * u[ii, jj] + u[ii - 1, jj]) * invh2
            uyy = (u[ii, jj + 1] - 2.0 * u[ii, jj] + u[ii, jj - 1]) * invh2
            uxy = (
                u[ii + 1, jj + 1] - u[ii - 1, jj + 1] - u[ii + 1, jj - 1] + u[ii - 1, jj - 1]
            ) * inv4h2
            g2 = ux * ux + uy * uy
            den = g2 * np.sqrt(g2)
            if den < 1e-12:
                den = 1e-12
            kap = (uy * uy * uxx - 2.0 * ux * uy * uxy + ux * ux * uyy) / den
            raw[i, j] = kap
            clamped[i, j] = min(kmax, max(-kmax, kap))


@njit(cache=True)
def normal_central_3d(u, h, n1, n2, n3):
    """Normalised central gradient on the interior plus a one-node ring.

    Output arrays are (nx+2, ny+2, nz+2); offset G-1 into the ghosted array.
    """
    mx, my, mz = n1.shape
    inv2h = 0.5 / h
    for i in range(mx):
        ii = i + G - 1
        for j in range(my):
            jj = j + G - 1
            for k in range(mz):
                kk = k + G - 1
                gx = (u[ii + 1, jj, kk] - u[ii - 1, jj, kk]) * inv2h
                gy = (u[ii, jj + 1, kk] - u[ii, jj - 1, kk]) * inv2h
                gz = (u[ii, jj, kk + 1] - u[ii, jj, kk - 1]) * inv2h
                mag = np.sqrt(gx * gx + gy * gy + gz * gz)
                if mag < 1e-12:
                    mag = 1e-12
                n1[i, j, k] = gx / mag
                n2[i, j, k] = gy / mag
                n3[i, j, k] = gz / mag


@njit(cache=True)
def curvature_3d(n1, n2, n3, h, raw, clamped):
    """Mean curvature 0.5 * div(n) from the ringed normal arrays above."""
    nx, ny, nz = raw.shape
    inv2h = 0.5 / h
    kmax = 1.0 / h
    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                div = (
                    (n1[i + 2, j + 1, k + 1] - n1[i, j + 1, k + 1])
                    + (n2[i + 1, j + 2, k + 1] - n2[i + 1, j, k + 1])
                    + (n3[i + 1, j + 1, k + 2] - n3[i + 1, j + 1, k])
                ) * inv2h
                kap = 0.5 * div
                raw[i, j, k] = kap
                clamped[i, j, k] = min(kmax, max(-kmax, kap))


# -- Alpha source assembly ---------------------------------------------------


@njit(cache=True)
def alpha_2d(u, h, mx, px, my, py, n1, n2, kap_sq, kap_dn, D, A, alpha):
    """alpha = -V n.grad(V) - kap_sq V^2 - D kap_dn n.grad(V) - D n^T H(V) n - A V.

    ``u`` is the ghosted V array; first derivatives are the upwind WENO pairs
    selected on V n_i (> 0 backward, <= 0 forward); second derivatives are
    central.  ``kap_sq`` multiplies V^2 ((d-1) kappa, clamped), ``kap_dn`` is
    the (d-1) kappa used in the diffusion projection term.
    """
    nx, ny = alpha.shape
    invh2 = 1.0 / (h * h)
    inv4h2 = 0.25 / (h * h)
    for i in range(nx):
        ii = i + G
        for j in range(ny):
            jj = j + G
            v = u[ii, jj]
            a1 = n1[i, j]
            a2 = n2[i, j]
            gx = mx[i, j] if v * a1 > 0.0 else px[i, j]
            gy = my[i, j] if v * a2 > 0.0 else py[i, j]
            ndv = a1 * gx + a2 * gy
            vxx = (u[ii + 1, jj] - 2.0 * v + u[ii - 1, jj]) * invh2
            vyy = (u[ii, jj + 1] - 2.0 * v + u[ii, jj - 1]) * invh2
            vxy = (
                u[ii + 1, jj + 1] - u[ii - 1, jj + 1] - u[ii + 1, jj - 1] + u[ii - 1, jj - 1]
            ) * inv4h2
            nhn = a1 * a1 * vxx + 2.0 * a1 * a2 * vxy + a2 * a2 * vyy
            alpha[i, j] = (
                -v * ndv
                - kap_sq[i, j] * v * v
                - D * kap_dn[i, j] * ndv
                - D * nhn
                - A * v
            )


@njit(cache=True)
def alpha_3d(u, h, mx, px, my, py, mz, pz, n1, n2, n3, kap_sq, kap_dn, D, A, alpha):
    nx, ny, nz = alpha.shape
    invh2 = 1.0 / (h * h)
    inv4h2 = 0.25 / (h * h)
    for i in range(nx):
        ii = i + G
        for j in range(ny):
            jj = j + G
            for k in range(nz):
                kk = k + G
                v = u[ii, jj, kk]
                a1 = n1[i, j, k]
                a2 = n2[i, j, k]
                a3 = n3[i, j, k]
                gx = mx[i, j, k] if v * a1 > 0.0 else px[i, j, k]
                gy = my[i, j, k] if v * a2 > 0.0 else py[i, j, k]
                gz = mz[i, j, k] if v * a3 > 0.0 else pz[i, j, k]
                ndv = a1 * gx + a2 * gy + a3 * gz
                vxx = (u[ii + 1, jj, kk] - 2.0 * v + u[ii - 1, jj, kk]) * invh2
                vyy = (u[ii, jj + 1, kk] - 2.0 * v + u[ii, jj - 1, kk]) * invh2
                vzz = (u[ii, jj, kk + 1] - 2.0 * v + u[ii, jj, kk - 1]) * invh2
                vxy = (
                    u[ii + 1, jj + 1, kk] - u[ii - 1, jj + 1, kk]
                    - u[ii + 1, jj - 1, kk] + u[ii - 1, jj - 1, kk]
                ) * inv4h2
                vxz = (
                    u[ii + 1, jj, kk + 1] - u[ii - 1, jj, kk + 1]
                    - u[ii + 1, jj, kk - 1] + u[ii - 1, jj, kk - 1]
                ) * inv4h2
                vyz = (
                    u[ii, jj + 1, kk + 1] - u[ii, jj - 1, kk + 1]
                    - u[ii, jj + 1, kk - 1] + u[ii, jj - 1, kk - 1]
                ) * inv4h2
                nhn = (
                    a1 * a1 * vxx + a2 * a2 * vyy + a3 * a3 * vzz
                    + 2.0 * (a1 * a2 * vxy + a1 * a3 * vxz + a2 * a3 * vyz)
                )
                alpha[i, j, k] = (
                    -v * ndv
                    - kap_sq[i, j, k] * v * v
                    - D * kap_dn[i, j, k] * ndv
                    - D * nhn
                    - A * v
                )


# -- Orthogonal extrapolation sweep ------------------------------------------


@njit(cache=True)
def extrap_iter_2d(w, h, S, n1, n2, dtau, out):
    """One sweep of W <- W - dtau S(phi) n.grad(W), first-order upwind on
    the advection speed c = S n.  ``w`` is ghosted; S, n are interior."""
    nx, ny = out.shape
    inv_h = 1.0 / h
    for i in range(nx):
        ii = i + G
        for j in range(ny):
            jj = j + G
            s = S[i, j]
            c1 = s * n1[i, j]
            c2 = s * n2[i, j]
            if c1 > 0.0:
                gx = (w[ii, jj] - w[ii - 1, jj]) * inv_h
            else:
                gx = (w[ii + 1, jj] - w[ii, jj]) * inv_h
            if c2 > 0.0:
                gy = (w[ii, jj] - w[ii, jj - 1]) * inv_h
            else:
                gy = (w[ii, jj + 1] - w[ii, jj]) * inv_h
            out[i, j] = w[ii, jj] - dtau * (c1 * gx + c2 * gy)


@njit(cache=True)
def extrap_iter_3d(w, h, S, n1, n2, n3, dtau, out):
    nx, ny, nz = out.shape
    inv_h = 1.0 / h
    for i in range(nx):
        ii = i + G
        for j in range(ny):
            jj = j + G
            for k in range(nz):
                kk = k + G
                s = S[i, j, k]
                c1 = s * n1[i, j, k]
                c2 = s * n2[i, j, k]
                c3 = s * n3[i, j, k]
                if c1 > 0.0:
                    gx = (w[ii, jj, kk] - w[ii - 1, jj, kk]) * inv_h
                else:
                    gx = (w[ii + 1, jj, kk] - w[ii, jj, kk]) * inv_h
                if c2 > 0.0:
                    gy = (w[ii, jj, kk] - w[ii, jj - 1, kk]) * inv_h
                else:
                    gy = (w[ii, jj + 1, kk] - w[ii, jj, kk]) * inv_h
                if c3 > 0.0:
                    gz = (w[ii, jj, kk] - w[ii, jj, kk - 1]) * inv_h
                else:
                    gz = (w[ii, jj, kk + 1] - w[ii, jj, kk]) * inv_h
                out[i, j, k] = w[ii, jj, kk] - dtau * (c1 * gx + c2 * gy + c3 * gz)
