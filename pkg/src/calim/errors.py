"""Exception types raised by the toolkit.

Every error derives from :class:`CalibrationError`, which is itself a
``ValueError`` so callers that only care about bad input can catch that.
"""


class CalibrationError(ValueError):
    pass


class DimensionMismatch(CalibrationError):
    pass


class LabelOutOfRange(CalibrationError):
    pass


class NonFinite(CalibrationError):
    pass


class NotNormalized(CalibrationError):
    pass


class TooFewClasses(CalibrationError):
    pass


class InconsistentInput(CalibrationError):
    """Both logits and probabilities were given and they disagree."""


class InvalidBinCount(CalibrationError):
    pass


class OutOfRange(CalibrationError):
    pass


class ClassOutOfRange(CalibrationError):
    pass


class AllBinsEmpty(CalibrationError):
    pass


class EmptyInput(CalibrationError):
    pass


class NonPositiveWeight(CalibrationError):
    pass


class ClassCountMismatch(CalibrationError):
    pass


class MissingLogits(CalibrationError):
    pass


class LengthMismatch(CalibrationError):
    pass


class AlphaOutOfRange(CalibrationError):
    pass


class NegativeGamma(CalibrationError):
    pass


class InvalidConfig(CalibrationError):
    pass


class MapFormatError(CalibrationError):
    pass
