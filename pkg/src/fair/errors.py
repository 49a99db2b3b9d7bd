"""Exception types shared across the package."""


class FairError(Exception):
    """Base class for package errors."""


class ConfigurationError(FairError, ValueError):
    """Invalid configuration: bad keys, bad values, empty sources."""

    def __init__(self, message, path=None):
        self.path = path
        if path:
            message = f"{path}: {message}"
        super().__init__(message)


class DataError(FairError):
    """Dataset layout or content violates what a command expects."""


class UndefinedMetricError(FairError, ValueError):
    """A metric cannot be computed for the given labels (e.g. single class)."""


class InvalidColorSpaceError(FairError, ValueError):
    pass


class TrainingDivergedError(FairError, RuntimeError):
    pass
