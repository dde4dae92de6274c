"""Closed-form reference solutions and a brute-force radial integrator.

These are the independent yardsticks used by the test and acceptance
suites; nothing in here touches the grid solver.

For a circular pore of initial radius R0 infilling at initial speed v0
(cell number conserved on the shrinking perimeter):

    R(t) = R0 * sqrt(1 - 2 v0 t / R0),      V(t) = v0 * R0 / R(t)

so R(t) V(t) = R0 v0 is an exact invariant.  A negative ``v0`` describes
outward growth of a disc with the same formula.

For a spherical tissue with proliferation P and depletion A acting on the
total cell number, N(t) = N0 exp((P-A) t), the radius obeys

    R(t) = R0 * [1 + (3 v0 / R0) * (exp((P-A) t) - 1) / (P - A)]^(1/3)

with the removable P = A limit R0 * (1 + 3 v0 t / R0)^(1/3).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Below this, (exp(x t) - 1)/x is evaluated by its series to dodge the
# removable singularity at P = A.
_RATE_EPS = 1e-10


@dataclass(frozen=True)
class CircleSolution:
    """Shrinking circular pore: R0 in mm, v0 in mm/day (positive = infilling)."""

    R0: float
    v0: float

    @property
    def closure_time(self) -> float:
        """Time at which R reaches zero (only meaningful for v0 > 0)."""
        return self.R0 / (2.0 * self.v0)


@dataclass(frozen=True)
class SpheroidSolution:
    """Growing/shrinking sphere: v0 signed (positive = growth), P/A in 1/day."""

    R0: float
    v0: float
    P: float = 0.0
    A: float = 0.0


def circle_R(t: float, sol: CircleSolution) -> float:
    """Pore radius at time t; raises past closure."""
    arg = 1.0 - 2.0 * sol.v0 * t / sol.R0
    if arg < 0.0:
        raise ValueError(
            f"t={t:g} days is past pore closure at t={sol.closure_time:g} days"
        )
    return sol.R0 * math.sqrt(arg)


def circle_V(t: float, sol: CircleSolution) -> float:
    """Interface speed at time t: v0 R0 / R(t)."""
    return sol.v0 * sol.R0 / circle_R(t, sol)


def _expm1_over_x(x: float, t: float) -> float:
    """(exp(x t) - 1) / x, continuous through x = 0."""
    if abs(x) < _RATE_EPS:
        return t * (1.0 + 0.5 * x * t)
    return math.expm1(x * t) / x


def spheroid_R(t: float, sol: SpheroidSolution) -> float:
    """Spheroid radius at time t; raises once a shrinking sphere is extinct."""
    rate = sol.P - sol.A
    bracket = 1.0 + (3.0 * sol.v0 / sol.R0) * _expm1_over_x(rate, t)
    if bracket < 0.0:
        raise ValueError(
            f"t={t:g} days is past spheroid extinction (bracket {bracket:.3g} < 0)"
        )
    return sol.R0 * bracket ** (1.0 / 3.0)


def radial_ode_oracle(
    shape: str,
    R0: float,
    v0: float,
    P: float = 0.0,
    A: float = 0.0,
    t_end: float = 1.0,
    steps: int = 200_000,
) -> tuple[np.ndarray, np.ndarray]:
    """Integrate dR/dt = v0 R0^(d-1) exp((P-A) t) / R^(d-1) with classic RK4.

    ``shape`` is "circle" (d=2) or "sphere" (d=3); v0 is the signed speed of
    the boundary at t=0 (the sign convention matches the closed forms above:
    positive shrinks a circle pore but grows a sphere).  Returns (t, R)
    arrays of length steps+1.  Independent cross-check for the closed-form
    solutions and for depletion-modified runs that have none.
    """
    if shape == "circle":
        power = 1
        sgn = -1.0  # pore convention: positive v0 moves the contour inward
    elif shape == "sphere":
        power = 2
        sgn = 1.0
    else:
        raise ValueError(f"unknown shape {shape!r}")

    rate = P - A
    ts = np.linspace(0.0, t_end, steps + 1)
    h = t_end / steps
    R = np.empty(steps + 1)
    R[0] = R0

    def f(t: float, r: float) -> float:
        return sgn * v0 * (R0 / r) ** power * math.exp(rate * t)

    r = R0
    for i in range(steps):
        t = ts[i]
        k1 = f(t, r)
        k2 = f(t + 0.5 * h, r + 0.5 * h * k1)
        k3 = f(t + 0.5 * h, r + 0.5 * h * k2)
        k4 = f(t + h, r + h * k3)
        r = r + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        R[i + 1] = r
    return ts, R
