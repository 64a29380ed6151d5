"""Exception hierarchy shared across the package.

Three failure categories are distinguished because callers (and the CLI
exit codes) treat them differently: bad inputs, numerical breakdown, and
solvers running out of iterations.
"""


class MVGPError(Exception):
    """Base class for all package errors."""


class ValidationError(MVGPError, ValueError):
    """Invalid user input: malformed files, bad dimensions, bad config."""


class NumericError(MVGPError, RuntimeError):
    """Numerical failure: singular systems, failed decompositions."""


class ConvergenceError(NumericError):
    """A solver hit its iteration cap before reaching tolerance.

    Carries the last iterate so callers can inspect or reuse it.
    """

    def __init__(self, message, iterations=None, last_objective=None, model=None):
        super().__init__(message)
        self.iterations = iterations
        self.last_objective = last_objective
        self.model = model
