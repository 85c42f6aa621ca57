"""Exception hierarchy shared by all modules."""


class IPSError(Exception):
    """Base class for every error raised by ipstruct."""

    stage = "unknown"


class DimensionError(IPSError, ValueError):
    stage = "input"


class ParameterError(IPSError, ValueError):
    stage = "input"


class ContractError(IPSError, ValueError):
    """An input violates a numerical precondition (TP, Hermitian, PSD...).

    ``residual`` carries the size of the violation so noisy inputs can be
    diagnosed rather than just rejected.
    """

    stage = "validation"

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NumericError(IPSError, ArithmeticError):
    stage = "numeric"

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class StructuralError(IPSError):
    """The recovered fixed-point data does not have the structure of an algebra."""

    stage = "structure"

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
