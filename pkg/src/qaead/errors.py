"""Exception hierarchy shared across the package."""


class QaeadError(Exception):
    """Base class for all qaead errors."""


class ConfigurationError(QaeadError):
    """A configuration value or combination of values is invalid."""


class InputError(QaeadError):
    """Runtime input data violates an operation's precondition."""


class IngestionError(QaeadError):
    """A data file could not be parsed; the message carries row/column context."""


class DatasetError(QaeadError):
    """A dataset is unusable for the requested operation (e.g. no normal windows)."""


class ContractViolationError(QaeadError):
    """A caller-side contract was broken (e.g. anomalous windows passed to training)."""
