"""Exception hierarchy shared by every module of the package."""


class OrderGraphError(Exception):
    """Base class for all errors raised by ordergraph."""


class InfeasibleAction(OrderGraphError, ValueError):
    pass


class LimitExceeded(OrderGraphError):
    pass


class TerminalState(OrderGraphError, ValueError):
    pass


class SingularRegression(OrderGraphError, ArithmeticError):
    pass


class CyclicGraph(OrderGraphError, ValueError):
    pass


class DimensionMismatch(OrderGraphError, ValueError):
    pass


class NoFeasibleAction(OrderGraphError, ValueError):
    pass


class NonFiniteGradient(OrderGraphError, ArithmeticError):
    pass


class Diverged(OrderGraphError, RuntimeError):
    pass


class EmptyLayer(OrderGraphError, LookupError):
    pass


class EmptyList(OrderGraphError, ValueError):
    pass


class TooFewSamples(OrderGraphError, ValueError):
    pass


class ParseError(OrderGraphError, ValueError):
    def __init__(self, message, row=None, col=None):
        super().__init__(message)
        self.row = row
        self.col = col


class NonFiniteValue(ParseError):
    pass
