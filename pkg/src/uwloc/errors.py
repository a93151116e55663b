"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`UwlocError`
so callers (and the CLI) can separate domain failures from bugs.  The CLI maps
the three families below onto exit codes 2, 3 and 4.
"""


class UwlocError(Exception):
    """Base class for all package errors."""


class ConfigError(UwlocError):
    """Invalid input, configuration or argument (CLI exit 2)."""


class ArtifactError(UwlocError):
    """A required artifact is missing or was modified (CLI exit 3)."""


class NumericalError(UwlocError):
    """A computation diverged or is ill-posed (CLI exit 4)."""


# spectral preprocessing
class EmptySignal(ConfigError):
    pass


class OddFrameLength(ConfigError):
    pass


class LabelLengthMismatch(ConfigError):
    pass


class DegenerateRange(NumericalError):
    pass


class FormatError(ConfigError):
    """A binary or text file does not follow its declared layout."""


# PCA / PCR / selection
class TooFewRows(ConfigError):
    pass


class InvalidComponentCount(ConfigError):
    pass


class SingularNormalEquations(NumericalError):
    pass


class ZeroVarianceComponent(NumericalError):
    pass


class DimensionMismatch(ConfigError):
    pass


class EmptySelection(NumericalError):
    pass


class IndexOutOfRange(ConfigError):
    pass


class ZeroVarianceColumn(NumericalError):
    pass


class SizeTooLarge(ConfigError):
    pass


# dataset
class InvalidModulus(ConfigError):
    pass


class LengthMismatch(ConfigError):
    pass


# neural network
class ShapeMismatch(ConfigError):
    pass


class StaleCache(UwlocError):
    """A backward pass was given a cache produced before a parameter update."""


class KernelExceedsInput(ConfigError):
    pass


class TooManyLayersForWidth(ConfigError):
    pass


class MissingCheckpoint(ArtifactError):
    pass


class DivergenceDetected(NumericalError):
    pass


# reports
class DivisionByZero(NumericalError):
    pass


# synthetic data
class ToneAboveNyquist(ConfigError):
    pass


# configuration
class UnknownKey(ConfigError):
    def __init__(self, key, suggestion=None):
        self.key = key
        self.suggestion = suggestion
        msg = f"unknown config key {key!r}"
        if suggestion:
            msg += f"; did you mean {suggestion!r}?"
        super().__init__(msg)


class ConfigTypeError(ConfigError):
    def __init__(self, key, expected, value):
        self.key = key
        super().__init__(f"config key {key!r}: expected {expected}, got {value!r}")
