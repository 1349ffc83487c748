"""Exception hierarchy shared by all modules."""


class PerfhomError(Exception):
    """Base class for library errors."""


class PreconditionError(PerfhomError, ValueError):
    """Input violates an operation's stated precondition."""


class UnsupportedDimensionError(PreconditionError):
    pass


class DegenerateLogError(PreconditionError):
    pass


class GeometryError(PreconditionError):
    pass


class UnderResolvedHoleError(GeometryError):
    pass


class EmptyFluidError(GeometryError):
    pass


class NoObstacleError(GeometryError):
    """Cell problem without a hole; the periodic Stokes system is singular."""


class CompatibilityError(PreconditionError):
    """Right-hand side is not orthogonal to the operator's kernel."""


class SingularSystemError(CompatibilityError):
    pass


class NonConvergenceError(PerfhomError, RuntimeError):
    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = list(residuals or [])


class InstabilityError(NonConvergenceError):
    pass


class DiscretizationInconsistencyError(PerfhomError, RuntimeError):
    pass


class SizeGuardError(PreconditionError):
    pass


class ConfigError(PerfhomError, ValueError):
    pass
