"""Exception hierarchy shared by every protectq module."""


class ProtectqError(Exception):
    """Base class for all errors raised by protectq."""


class InvalidArgumentError(ProtectqError, ValueError):
    pass


class InvalidBasisError(InvalidArgumentError):
    pass


class InvalidParameterError(InvalidArgumentError):
    pass


class BasisMismatchError(InvalidArgumentError):
    pass


class ChannelNotPresentError(InvalidArgumentError):
    pass


class IncompleteInputError(InvalidArgumentError):
    pass


class InterpolationRangeError(InvalidArgumentError):
    pass


class NumericalFailureError(ProtectqError, ArithmeticError):
    """Eigensolver or derivative failure; carries the offending residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ConfigError(ProtectqError, ValueError):
    """Config parse/validation failure listing every problem found."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
