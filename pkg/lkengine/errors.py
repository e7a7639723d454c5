# lkengine/errors.py
"""Exception hierarchy shared by the geometry modules and the CLI.

Every error carries the process exit code the CLI should use when it
escapes a command.
"""


class EngineError(Exception):
    """Base class for all engine failures"""
    exit_code = 1


class InputError(EngineError):
    """Malformed expressions, charts, URIs or flags"""
    exit_code = 4


class ExpressionSyntaxError(InputError):
    def __init__(self, message, offset):
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset


class UnknownIdentifierError(InputError):
    def __init__(self, name, offset=None):
        where = f" at byte {offset}" if offset is not None else ""
        super().__init__(f"unknown identifier '{name}'{where}")
        self.name = name
        self.offset = offset


class VariableIndexError(InputError):
    def __init__(self, index, dim):
        super().__init__(f"variable index out of range: x{index} in a {dim}-dimensional chart")
        self.index = index
        self.dim = dim


class ExpressionDomainError(InputError):
    """An elementary function was evaluated outside its domain"""

    def __init__(self, reason, subexpression):
        super().__init__(f"{reason} in '{subexpression}'")
        self.reason = reason
        self.subexpression = subexpression


class ZooError(InputError):
    """Unknown zoo entry or parameter outside its documented range"""


class MetricError(EngineError):
    """The metric is not symmetric positive definite where it must be"""
    exit_code = 2


class SingularMatrixError(MetricError):
    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class ValidationError(EngineError):
    """A structural check (submersion, partition of unity, suite) failed"""
    exit_code = 2


class ConvergenceError(EngineError):
    """Quadrature could not reach tolerance below the node cap"""
    exit_code = 3

    def __init__(self, message, eps=None, delta=None):
        if eps is not None:
            message = f"{message} (precision lost at eps={eps:.9g})"
        super().__init__(message)
        self.eps = eps
        self.delta = delta


class JetDomainError(EngineError):
    """Raised by jet arithmetic; the evaluator re-raises it with the subexpression"""
    exit_code = 4
