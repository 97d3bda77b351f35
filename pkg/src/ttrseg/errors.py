"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class TTRError(Exception):
    exit_code = 1


class ConfigError(TTRError, ValueError):
    exit_code = 2


class DimensionError(TTRError, ValueError):
    exit_code = 2


class StreamConsistencyError(TTRError):
    exit_code = 3


class InvariantViolation(TTRError):
    exit_code = 1


class UndefinedMetricError(TTRError, ArithmeticError):
    exit_code = 1


class UndefinedCorrelationError(UndefinedMetricError):
    pass


class FormatError(TTRError):
    """Base for malformed or unsupported files."""

    exit_code = 3


class ParseError(FormatError):
    def __init__(self, message, offset=None):
        self.detail = message
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class UnsupportedDepthError(ParseError):
    pass


class LabelRangeError(FormatError):
    pass


class WeightFileError(FormatError):
    pass


class WeightMagicError(WeightFileError):
    pass


class WeightVersionError(WeightFileError):
    pass


class WeightGeometryError(WeightFileError):
    pass


class WeightTruncationError(WeightFileError):
    def __init__(self, message, layer_index):
        super().__init__(f"{message} (layer {layer_index})")
        self.layer_index = layer_index


class TrailingBytesError(WeightFileError):
    pass
