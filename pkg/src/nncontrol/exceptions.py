"""Exception types raised by nncontrol."""


class NNControlError(Exception):
    """Base class for all package errors."""


class DuplicatePoints(NNControlError, ValueError):
    pass


class DimensionTooLarge(NNControlError, ValueError):
    pass


class EmptyPolytope(NNControlError):
    pass


class UnboundedCell(NNControlError):
    """The Voronoi cell of the base action is unbounded."""


class NumericalFailure(NNControlError, RuntimeError):
    pass


class Degenerate(NNControlError, ValueError):
    pass


class TooManyActions(NNControlError, ValueError):
    pass


class NotOrthogonal(NNControlError, ValueError):
    pass


class NotSteadyState(NNControlError, ValueError):
    pass


class DegenerateEquilibrium(NNControlError, ValueError):
    pass


class MissingSector(NNControlError, ValueError):
    pass


class MissingSetpoint(NNControlError, ValueError):
    pass


class NoSolution(NNControlError):
    pass


class NonFiniteState(NNControlError, FloatingPointError):
    """Closed-loop state blew up during integration."""

    def __init__(self, time, message=None):
        self.time = time
        super().__init__(message or f"non-finite state at t={time:g}")
