"""Exception types shared across the package."""


class CurveflowError(Exception):
    """Base class for all package errors."""


class ConfigurationError(CurveflowError):
    """Invalid run configuration (bad key, bad value, bad geometry)."""


class EmptyInterfaceError(CurveflowError):
    """An operation that requires a zero crossing received a field without one."""


class CflViolationError(CurveflowError):
    """A level-set step was rejected because max|V| dt / dx exceeded the CFL bound.

    Carries the largest admissible time step so callers can adapt.
    """

    def __init__(self, cfl: float, cfl_max: float, dt: float, dt_admissible: float):
        self.cfl = cfl
        self.cfl_max = cfl_max
        self.dt = dt
        self.dt_admissible = dt_admissible
        super().__init__(
            f"CFL number {cfl:.3g} exceeds limit {cfl_max:.3g} at dt={dt:.3g}; "
            f"admissible dt <= {dt_admissible:.3g}"
        )


class NumericalBlowupError(CurveflowError):
    """A field developed non-finite values during time stepping."""
