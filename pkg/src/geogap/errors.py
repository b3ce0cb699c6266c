"""Exception hierarchy shared by all geogap modules."""


class GeoGapError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(GeoGapError, ValueError):
    pass


class ExprSyntaxError(GeoGapError, ValueError):
    """Malformed expression text; ``offset`` is the byte offset of the problem."""

    def __init__(self, message, offset=None, source=None):
        self.offset = offset
        self.source = source
        if offset is not None:
            message = f"{message} (at offset {offset})"
        super().__init__(message)


class ExprDomainError(GeoGapError, ArithmeticError):
    """Evaluation left the real domain of a function or operator."""

    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (subexpression at offset {offset})"
        super().__init__(message)


class DomainExitError(GeoGapError):
    """A point or trajectory left the chart domain."""

    def __init__(self, message, step=None, point=None, leg=None):
        self.step = step
        self.point = point
        self.leg = leg
        super().__init__(message)


class SingularError(GeoGapError, ArithmeticError):
    """A metric or frame that must be invertible was (numerically) singular."""


class FitError(GeoGapError):
    """Limit extrapolation failed or produced an unreliable fit."""

    def __init__(self, message, condition=None):
        self.condition = condition
        super().__init__(message)


class ConfigError(GeoGapError, ValueError):
    """Invalid geometry specification or run configuration."""
