"""Exception hierarchy.

Every error raised on bad *data* derives from :class:`DataError`; problems
with how the tools were invoked or configured raise :class:`ConfigError`.
The CLI maps the two families to different exit codes.
"""


class RadicalOCRError(Exception):
    """Base class for all package errors."""


class ConfigError(RadicalOCRError):
    pass


class DataError(RadicalOCRError):
    pass


class ParseError(DataError):
    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(where + message)
        self.path = path
        self.line = line


class ValidationError(DataError):
    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class UnknownCharacter(DataError, KeyError):
    pass


class UnknownStructure(DataError, KeyError):
    pass


class EmptyGlyph(DataError):
    pass


class InvalidParams(DataError, ValueError):
    pass


class EmptySet(DataError):
    pass


class SlotMismatch(DataError):
    pass


class NotSingleRadical(DataError):
    pass


class InsufficientData(DataError):
    pass


class EmptyTraining(DataError):
    pass


class RangeError(DataError, ValueError):
    pass


class IndexOutOfRange(DataError, IndexError):
    pass


class EmptyInput(DataError):
    pass


class EmptyGroundTruth(DataError):
    pass


class Overlap(DataError):
    pass
