"""Exception hierarchy shared by all hsmc modules."""


class HsmcError(Exception):
    """Base class for every error raised by this package."""


class DegenerateSample(HsmcError, ValueError):
    """Point sample cannot determine a rigid transform (too few or collinear)."""


class MissingLabels(HsmcError, ValueError):
    pass


class NotPruned(HsmcError, ValueError):
    """A correspondence set still holds pairs whose endpoint labels disagree."""


class CapacityExceeded(HsmcError, MemoryError):
    pass


class InvalidSeed(HsmcError, ValueError):
    pass


class TooLarge(HsmcError, ValueError):
    pass


class TooFewPairs(HsmcError, ValueError):
    pass


class NoValidSample(HsmcError, RuntimeError):
    pass


class NoSolution(HsmcError, RuntimeError):
    pass


class InfeasibleSpec(HsmcError, ValueError):
    pass


class MalformedFile(HsmcError, ValueError):
    pass


class LengthMismatch(HsmcError, ValueError):
    pass


class ParseError(HsmcError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class IndexOutOfBounds(HsmcError, IndexError):
    pass


class WriteFailure(HsmcError, OSError):
    pass
