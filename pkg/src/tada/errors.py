"""Exception hierarchy shared by every tada module.

Everything a caller can fix by passing different inputs derives from
``TadaValueError``; file-system and format problems derive from ``TadaIOError``.
The CLI maps the first family to exit status 1 and the second to 2.
"""


class TadaError(Exception):
    pass


class TadaValueError(TadaError, ValueError):
    pass


class TadaIOError(TadaError, OSError):
    pass


class LengthMismatch(TadaValueError):
    pass


class DegenerateArtifact(TadaValueError):
    pass


class DegenerateClean(TadaValueError):
    pass


class DegenerateTruth(TadaValueError):
    pass


class DegenerateSpan(TadaValueError):
    pass


class NonPowerOfTwoLength(TadaValueError):
    pass


class InvalidCount(TadaValueError):
    pass


class NonFiniteSamples(TadaValueError):
    pass


class ShapeMismatch(TadaValueError):
    pass


class DegenerateBatch(TadaValueError):
    pass


class OddLength(TadaValueError):
    pass


class InvalidProbability(TadaValueError):
    pass


class InsufficientData(TadaValueError):
    pass


class WindowTooLarge(TadaValueError):
    pass


class InvalidTaps(TadaValueError):
    pass


class MissingCalibration(TadaValueError):
    pass


class DegenerateScale(TadaValueError):
    pass


class MissingModels(TadaIOError):
    pass


class EmptyCorpus(TadaValueError):
    pass


class ConfigError(TadaValueError):
    pass


class CorruptFile(TadaIOError):
    pass
