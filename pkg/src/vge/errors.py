"""Exception hierarchy shared by all modules."""


class VGEError(Exception):
    """Base class for errors raised by this package."""


class InputFormatError(VGEError, ValueError):
    """A graph or origami description could not be parsed or is invalid."""


class ResourceLimitError(VGEError, RuntimeError):
    """An enumeration exceeded its configured node cap."""

    def __init__(self, cap, what="frontier"):
        self.cap = cap
        super().__init__(f"{what} size exceeded the resource cap of {cap} nodes")


class HypothesisViolation(VGEError):
    """A structural hypothesis needed by the requested computation fails."""


class NoSingularities(HypothesisViolation):
    """The origami has no cone points of angle greater than 2*pi."""


class DisconnectedTruncation(HypothesisViolation):
    """The transfer relation restricted to a truncation is not strongly connected."""


class TailConditionError(VGEError, ArithmeticError):
    """The tail block of a Schur split is not certified to be a contraction."""


class ConvergenceError(VGEError, ArithmeticError):
    """An iterative method did not reach its tolerance."""

    def __init__(self, message, residual=None):
        self.residual = residual
        super().__init__(message)


class EntropyDivergence(VGEError, ArithmeticError):
    """No parameter makes the Perron root drop below one."""
