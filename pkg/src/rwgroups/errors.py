"""Exception types and result statuses shared by all modules."""

import enum


class RandomWalkError(Exception):
    """Base class for every error raised by this package."""


class StructuralError(RandomWalkError):
    """Objects from different groups (or malformed elements) were combined."""


class ParseError(RandomWalkError, ValueError):
    """Text could not be decoded into an element, measure, set or action."""


class CapExceeded(RandomWalkError):
    """A configured enumeration, convolution or depth cap was hit."""


class RadiusExceeded(CapExceeded):
    """BFS word length search exhausted its radius without reaching the target."""


class DepthError(RandomWalkError):
    """A cylinder is too shallow for the requested group element."""


class NoContractionCertificate(RandomWalkError):
    """No power of the convolution operator was certified to contract."""


class QuasiHarmonicityError(RandomWalkError):
    """A function failed the quasi-harmonicity pre-check.

    ``witness`` is the group element where the check failed.
    """

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class HarmonicityError(QuasiHarmonicityError):
    """A constructed function is not harmonic within tolerance."""


class NonSymmetricMeasure(RandomWalkError):
    """An operation that needs a symmetric measure received a non-symmetric one."""


class Status(enum.Enum):
    """Three-valued outcome for window- or cap-limited searches."""

    TRUE = "true"
    FALSE = "false"
    INCONCLUSIVE = "inconclusive"

    def __bool__(self):
        return self is Status.TRUE
