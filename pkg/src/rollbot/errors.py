"""Exception types shared across the package.

The CLI maps these onto exit codes: validation-style errors exit 1,
I/O errors exit 2, numerical divergence exits 3.
"""


class InvalidArgumentError(ValueError):
    """A scalar argument violates a documented precondition."""


class MalformedInputError(ValueError):
    """A series, file, or schema does not match its contract."""


class ConfigKeyError(MalformedInputError):
    """A config-file key is missing, unknown, or unparseable."""


class DomainError(ValueError):
    """Geometry input lies outside the mathematical domain of an operation."""


class DegenerateGeometryError(DomainError):
    """Vector geometry collapsed to zero norm, so an angle is undefined."""


class NoRealSolutionError(ValueError):
    """The torque-balance quadratic has no real root.

    Carries the offending discriminant so callers can log it.
    """

    def __init__(self, message: str, discriminant: float):
        super().__init__(message)
        self.discriminant = discriminant


class SingularConfigurationError(ValueError):
    """The linear-fallback denominator vanished; no unique solution."""


class AlignmentError(MalformedInputError):
    """Two series that must share timestamps disagree."""


class SimulationDivergenceError(RuntimeError):
    """Simulation state magnitude blew up; the time step is too coarse."""
