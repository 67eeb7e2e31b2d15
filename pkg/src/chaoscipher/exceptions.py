"""Exception hierarchy shared by every module."""


class ChaosCipherError(Exception):
    """Base class for all errors raised by this package."""


class KeyFormatError(ChaosCipherError, ValueError):
    """Key text is not 20 hexadecimal digits, or a subkey is out of range."""


class InvalidKey(ChaosCipherError):
    """The key drives the global chaotic map to the fixed point 0."""


class NonConvergence(ChaosCipherError):
    """A chaotic orbit failed to enter the [0.1, 0.9) window."""


class OutOfWindow(ChaosCipherError, ValueError):
    pass


class BadDimensions(ChaosCipherError, ValueError):
    """Pixel count is not a multiple of the 16-pixel block size."""


class DimensionMismatch(ChaosCipherError, ValueError):
    pass


class MalformedPpm(ChaosCipherError, ValueError):
    pass


class MalformedSet(ChaosCipherError, ValueError):
    """An A* estimate has a size outside {2, 4, 8}."""


class EmptyEvidence(ChaosCipherError):
    pass


class NoCandidate(ChaosCipherError):
    """Every K10 guess was eliminated during candidate verification."""


class BudgetExceeded(ChaosCipherError):
    pass
