"""Level-set engine for curvature-controlled tissue growth.

The package co-evolves two Eulerian fields on a uniform Cartesian grid:

* ``phi`` -- a level-set function whose zero contour is the tissue
  interface (negative inside the tissue),
* ``V``   -- an extended normal-velocity field, ``V = k * rho``, carrying
  the surface density of tissue-synthesising cells at anticipated future
  interface locations.

Their coupled evolution,

    phi_t + V |grad phi| = 0
    V_t + V n.grad(V) = -V^2 div(n) + D lap_S(V) - A V

is a hyperbolic curvature flow: the normal *acceleration* of the interface
is proportional to curvature.  Spatial discretisation uses HJ-WENO5
one-sided derivatives with Godunov upwinding, the velocity diffusion is
integrated semi-implicitly (ADI), and the level-set function is kept a
signed distance function by PDE re-initialisation.
"""

from curveflow.errors import (
    CflViolationError,
    ConfigurationError,
    EmptyInterfaceError,
    NumericalBlowupError,
)
from curveflow.grid import BandMask, GridSpec, ScalarField, band_of, fill_ghost
from curveflow.oracles import CircleSolution, SpheroidSolution

__version__ = "0.1.0"

__all__ = [
    "BandMask",
    "CflViolationError",
    "CircleSolution",
    "ConfigurationError",
    "EmptyInterfaceError",
    "GridSpec",
    "NumericalBlowupError",
    "ScalarField",
    "SpheroidSolution",
    "band_of",
    "fill_ghost",
]
