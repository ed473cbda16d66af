"""Exception types raised across the package."""


class InputShapeError(ValueError):
    """Array length or shape does not match what the operation requires."""


class UnsupportedModulationError(ValueError):
    pass


class InvalidDimensionError(ValueError):
    pass


class InvalidGeometryError(ValueError):
    """Non-positive distance between vehicle and base station."""


class InvalidProfileError(ValueError):
    """Multipath profile is inconsistent (delays, powers, lengths)."""


class ISIViolationError(ValueError):
    """Cyclic prefix shorter than the channel delay spread."""


class DegenerateInputError(ValueError):
    pass


class SingularPilotError(ValueError):
    pass


class InsufficientDataError(ValueError):
    pass


class UndefinedMetricError(ValueError):
    pass


class MissingModelError(RuntimeError):
    pass


class DivergenceError(FloatingPointError):
    """Training produced a non-finite cost.

    ``network`` holds the last weights for which the cost was finite.
    """

    def __init__(self, message, network=None, epoch=None):
        super().__init__(message)
        self.network = network
        self.epoch = epoch


class ConfigError(ValueError):
    """Invalid run configuration; ``key`` names the offending ``section.option``."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key
