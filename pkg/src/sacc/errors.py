"""Exception types raised across the simulator."""


class SaccError(ValueError):
    """Base class for every validation or configuration error."""


class NonPositive(SaccError):
    pass


class NonIntegerOutput(SaccError):
    pass


class ShiftOutOfRange(SaccError):
    pass


class ChannelMismatch(SaccError):
    pass


class ShapeMismatch(SaccError):
    pass


class OddDimension(SaccError):
    pass


class RowTooWide(SaccError):
    pass


class UnsupportedStride(SaccError):
    pass


class UnsupportedPadding(SaccError):
    pass


class FilterWidthMismatch(SaccError):
    pass


class EmptyRange(SaccError):
    pass


class NotDefaultConfig(SaccError):
    pass


class LoggingDisabled(SaccError):
    pass


class PingPongViolation(AssertionError):
    """A compute write landed in a bank that was being drained."""


class LayerError(SaccError):
    """Wraps an error raised while processing one layer of a network."""

    def __init__(self, index, name, cause):
        self.index = index
        self.name = name
        self.cause = cause
        super().__init__(f"layer {index} ({name}): {type(cause).__name__}: {cause}")
