"""Exception hierarchy."""


class SNNError(Exception):
    """Base class for all errors raised by snnpde."""


class ConfigurationError(SNNError, ValueError):
    pass


class NumericError(SNNError, ArithmeticError):
    pass


class AssemblyError(SNNError):
    def __init__(self, message: str, row: int | None = None):
        super().__init__(message)
        self.row = row


class ConstructionError(SNNError, TypeError):
    """A loss was built from something the differentiation engine does not support."""


class TrainingError(SNNError):
    def __init__(self, message: str, epoch: int):
        super().__init__(message)
        self.epoch = epoch


class UndefinedNormError(SNNError, ZeroDivisionError):
    pass
