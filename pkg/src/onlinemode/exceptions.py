"""Exception hierarchy shared by the estimator, oracles and CLI."""


class OnlineModeError(Exception):
    """Base class for all package errors."""


class ConfigError(OnlineModeError, ValueError):
    """Invalid configuration, parameters, or contract violation at setup time."""


class DataError(OnlineModeError, ValueError):
    """A sample could not be used (wrong shape, non-finite, too few samples).

    ``index`` is the zero-based position of the offending sample in the
    stream when known.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class DivergenceError(OnlineModeError, ArithmeticError):
    """The estimate became non-finite or left the divergence guard."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class OracleError(OnlineModeError, RuntimeError):
    """A reference computation failed to converge."""


class GridError(OracleError):
    """Grid search hit the boundary of its domain; the grid is too small."""
