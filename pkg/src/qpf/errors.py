"""Exception types raised across the package."""


class QpfError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(QpfError, ValueError):
    pass


class NotFoundError(QpfError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class ValidationError(QpfError, ValueError):
    """A configuration or sequence violates a structural invariant."""


class RuncardParseError(ValidationError):
    """The runcard does not follow the expected schema.

    ``key`` holds the dotted path of the offending entry.
    """

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


class StateError(QpfError, RuntimeError):
    """Operation called in the wrong connection state."""


class UnsupportedError(QpfError, NotImplementedError):
    pass


class SolverError(QpfError, RuntimeError):
    """The integrator could not meet its tolerances."""

    def __init__(self, message: str, time: float):
        super().__init__(f"{message} (t = {time:.6g} ns)")
        self.time = time


class NumericalStateError(QpfError, ArithmeticError):
    """A density matrix left the physical domain beyond tolerance."""


class AnalysisError(QpfError, RuntimeError):
    """A fit did not converge. The raw data is kept on ``data``."""

    def __init__(self, message: str, data=None):
        super().__init__(message)
        self.data = data
