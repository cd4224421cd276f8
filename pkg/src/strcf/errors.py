"""Exception types raised across the package."""


class StrcfError(Exception):
    """Base class for all errors raised by this package."""


class DimMismatch(StrcfError, ValueError):
    pass


class SymmetryViolation(StrcfError, ValueError):
    """Spectrum handed to ``idft2`` is not the transform of a real grid."""


class EmptyRegion(StrcfError, ValueError):
    pass


class DimNotDivisible(StrcfError, ValueError):
    pass


class DegenerateRegularization(StrcfError, ValueError):
    pass


class TooLarge(StrcfError, ValueError):
    pass


class DegenerateBox(StrcfError, ValueError):
    pass


class ImageDecodeError(StrcfError, OSError):
    pass


class SequenceError(StrcfError, OSError):
    """Base for problems with an on-disk sequence directory."""


class MissingGroundTruth(SequenceError):
    pass


class FrameCountMismatch(SequenceError):
    pass


class ParseError(SequenceError):
    def __init__(self, path, line, text):
        self.path = path
        self.line = line
        self.text = text
        super().__init__(f"{path}:{line}: cannot parse box from {text!r}")


class StateFormatError(StrcfError, ValueError):
    pass


class ConfigError(StrcfError, ValueError):
    pass


class EmptyInput(StrcfError, ValueError):
    pass
