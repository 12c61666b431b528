"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command-line interface:
2 for configuration / input problems, 3 for violated computational
preconditions.  I/O failures (``OSError``) map to 4 in the CLI itself.
"""


class DtmError(Exception):
    exit_code = 3


class InputError(DtmError):
    """Bad configuration or malformed input."""

    exit_code = 2


class ParseError(InputError):
    def __init__(self, message, row=None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row


class EmptyInput(InputError):
    pass


class DimensionError(InputError):
    pass


class InsufficientInput(InputError):
    pass


class InvalidK(InputError):
    pass


class InvalidShape(InputError):
    pass


class InvalidVariance(InputError):
    pass


class ConfigError(InputError):
    pass


class InsufficientPoints(DtmError):
    pass


class MassTooSmall(DtmError):
    pass


class DegenerateSample(DtmError):
    pass


class UnsupportedOracle(DtmError):
    pass


class DomainError(DtmError):
    pass


class NoDensity(DtmError):
    pass


class TooManyLoops(DtmError):
    pass
