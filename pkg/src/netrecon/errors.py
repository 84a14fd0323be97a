"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: parameter problems exit 1, numerical
failures exit 2, I/O failures exit 3.
"""


class NetReconError(Exception):
    """Base class for all package errors."""

    exit_code = 2


class ParameterError(NetReconError, ValueError):
    exit_code = 1


class NumericalError(NetReconError, ArithmeticError):
    exit_code = 2


class InstabilityError(NumericalError):
    """Integration produced a non-finite state."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class EstimationError(NumericalError):
    """Spectral estimation found no usable peaks or inconsistent ones."""


class ReconstructionError(NumericalError):
    """No threshold produced a usable candidate graph.

    ``trace`` holds the full g-versus-threshold sweep for diagnosis.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace or []


class OutputError(NetReconError, OSError):
    exit_code = 3
