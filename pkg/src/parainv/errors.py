"""Exception hierarchy shared by all modules."""


class InputError(ValueError):
    """Malformed or inconsistent input (shapes, non-unit vectors, NaNs, bad indices)."""


class GeometryError(ValueError):
    """A body description is degenerate (singular cone normals, empty interior, ...)."""


class NumericError(ArithmeticError):
    """A numerical routine overflowed or failed to converge."""


class DivergenceError(NumericError):
    """An explicit time integration blew up."""


class StabilityError(InputError):
    """The requested explicit time step violates the stability gate."""

    def __init__(self, message, dt, dt_max):
        super().__init__(message)
        self.dt = dt
        self.dt_max = dt_max
