"""Exception hierarchy shared across the package."""


class FlowModelError(Exception):
    """Base class for every error raised by this package."""


class InvalidCoordinateError(FlowModelError, ValueError):
    """Latitude/longitude outside bounds, non-finite, or outside the local frame."""


class InvalidGeometryError(FlowModelError, ValueError):
    """Degenerate or malformed polygon."""


class InvalidParameterError(FlowModelError, ValueError):
    """A numeric parameter outside its valid range."""


class EmptyInputError(FlowModelError, ValueError):
    """An operation received an empty collection it cannot work with."""


class SingularDistanceError(FlowModelError, ValueError):
    """Power-law deterrence evaluated at zero distance."""


class DegenerateFactorError(FlowModelError, ValueError):
    """An attractiveness factor vector that cannot be mean-normalized."""


class InvalidAttributeError(FlowModelError, ValueError):
    """Zone or museum attribute outside its valid range."""


class MarginalMismatchError(FlowModelError, ValueError):
    """Origin and destination totals disagree."""


class ConvergenceError(FlowModelError, RuntimeError):
    """Iterative balancing failed to converge; carries the last residual."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class UnreachableOriginError(FlowModelError, ValueError):
    """An origin whose entire deterrence row collapsed to zero."""


class AmbiguousZoneError(FlowModelError, ValueError):
    """A point strictly inside more than one zone polygon."""


class DegenerateVarianceError(FlowModelError, ValueError):
    """Correlation requested on a constant vector."""


class ShapeError(FlowModelError, ValueError):
    """Vector or matrix dimensions/labels do not line up."""


class DegenerateModelError(FlowModelError, ValueError):
    """A model whose total flow is zero; nothing can be sampled from it."""


class DataFormatError(FlowModelError, ValueError):
    """An input file that cannot be parsed; names the file and position."""
