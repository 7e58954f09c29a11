"""Exception hierarchy.

Each class carries the process exit code used by the command-line tool.
"""


class FPCError(Exception):
    exit_code = 1


class ConfigurationError(FPCError, ValueError):
    """Invalid input, mismatched dimensions or an inadmissible parameter."""

    exit_code = 2


class NumericalError(FPCError, ArithmeticError):
    """Non-finite values or a diverging iteration."""

    exit_code = 3


class NonConvergenceError(NumericalError):
    """An inner iterative routine ran out of iterations.

    The last available estimate is kept in ``estimate``.
    """

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class MonitorViolation(FPCError):
    """A runtime inequality check failed."""

    exit_code = 4
