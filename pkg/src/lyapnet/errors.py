class LyapnetError(Exception):
    """Base class for errors raised by this package."""


class ShapeError(LyapnetError, ValueError):
    """Dimension mismatch between a vector/matrix and the network layer it meets."""

    def __init__(self, message, layer=None):
        super().__init__(message)
        self.layer = layer


class NumericalError(LyapnetError, ArithmeticError):
    """A computation produced non-finite values.

    ``layer`` names the first offending layer transition when known.
    """

    def __init__(self, message, layer=None):
        super().__init__(message)
        self.layer = layer


class ConfigError(LyapnetError, ValueError):
    """Malformed network file, generator config or training config."""


class TrainingDivergedError(NumericalError):
    def __init__(self, message, epoch):
        super().__init__(message)
        self.epoch = epoch
