class BVPError(Exception):
    """Base class for problem, solver and condition-checking failures."""


class ExpressionError(BVPError, ValueError):
    pass


class ExpressionSyntaxError(ExpressionError):
    def __init__(self, message, offset, expected=()):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset
        self.expected = tuple(sorted(expected))


class UnknownIdentifierError(ExpressionError):
    def __init__(self, name, offset):
        super().__init__(f"unknown identifier {name!r} at offset {offset}")
        self.name = name
        self.offset = offset


class ArityError(ExpressionError):
    def __init__(self, name, expected, got, offset):
        super().__init__(f"{name}() takes {expected} argument(s), got {got} (offset {offset})")
        self.name = name
        self.expected = expected
        self.got = got
        self.offset = offset


class ExpressionDomainError(ExpressionError):
    """Evaluation left the function's domain; `subexpression` is the offending node."""

    def __init__(self, subexpression, detail=""):
        message = f"non-finite value from {subexpression}"
        if detail:
            message = f"{message}: {detail}"
        super().__init__(message)
        self.subexpression = subexpression


class EvaluationError(BVPError):
    """A problem function returned a non-finite value at an interior point."""

    def __init__(self, message, where=None):
        super().__init__(message)
        self.where = where


class ConditionsError(BVPError):
    pass


class NoAdmissibleEpsilonError(ConditionsError):
    def __init__(self, message, margins=None):
        super().__init__(message)
        self.margins = margins or {}


class ScheduleError(BVPError, ValueError):
    pass


class FixedPointError(BVPError):
    def __init__(self, message, iterations, update_norms, damping):
        super().__init__(message)
        self.iterations = iterations
        self.update_norms = list(update_norms)
        self.damping = damping


class CertificationError(BVPError):
    def __init__(self, report, violated):
        super().__init__(f"certification failed: {', '.join(violated)}")
        self.report = report
        self.violated = list(violated)
