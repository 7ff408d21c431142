"""Exception hierarchy shared by every layer."""


class SdplError(Exception):
    """Base class; carries an optional source span."""

    def __init__(self, message, span=None):
        self.span = span
        if span is not None:
            message = f"{span}: {message}"
        super().__init__(message)

    @property
    def kind(self):
        return type(self).__name__


class ParseError(SdplError):
    pass


# typing


class StaticError(SdplError):
    pass


class UnboundVariable(StaticError):
    pass


class UnboundFunction(StaticError):
    pass


class ArityMismatch(StaticError):
    pass


class TypeMismatch(StaticError):
    def __init__(self, expected, actual, what="term", span=None):
        self.expected = expected
        self.actual = actual
        super().__init__(f"{what}: expected {expected}, got {actual}", span)


class WhileContextViolation(StaticError):
    pass


class RecBodyFreeVarViolation(StaticError):
    pass


class UnknownOp(StaticError):
    pass


class UnknownPred(StaticError):
    pass


# partial maps


class DimensionMismatch(SdplError):
    pass


class JoinConflict(SdplError):
    pass


class MissingReversePrimitive(SdplError):
    pass


# operational semantics


class RuntimeFailure(SdplError):
    pass


class OutOfFuel(RuntimeFailure):
    pass


class StuckPredicate(RuntimeFailure):
    pass


class UndefinedPrimitive(RuntimeFailure):
    pass


class UnboundName(RuntimeFailure):
    pass


class SymbolicGuard(RuntimeFailure):
    pass


# symbolic differentiation / transforms


class NotATraceTerm(SdplError):
    pass


class ShapeMismatch(SdplError):
    pass
