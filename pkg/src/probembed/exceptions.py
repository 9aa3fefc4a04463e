"""Exception hierarchy shared by the library and the command line tool.

Three failure classes matter to callers: a bad configuration, bad input
data, and a numerical breakdown at runtime.  The CLI maps each class to
its own exit code, so library code should raise the most specific type
it can.
"""


class ProbembedError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(ProbembedError, ValueError):
    """A configuration value or combination of values is invalid."""


class DataError(ProbembedError, ValueError):
    """Input data violates a documented precondition."""


class NumericalError(ProbembedError, RuntimeError):
    """A numerical operation failed (singular matrix, divergence, ...)."""
