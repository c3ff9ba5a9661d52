"""Exception hierarchy shared across the package."""


class ValidationError(ValueError):
    """Raised when user-supplied input violates a documented contract."""


class MeritAssumptionError(ValidationError):
    """A merit function does not satisfy the positivity / bounded-ratio assumptions."""


class ConfigError(ValidationError):
    """Experiment configuration is malformed.

    The message is prefixed with the dotted path of the offending field.
    """

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class LogFormatError(ValidationError):
    """A feedback log file could not be parsed."""


class SimulationError(RuntimeError):
    """Internal inconsistency detected while simulating (never user error)."""
