"""
Exception hierarchy for smsguard.

Every error carries the process exit code the CLI reports for it:
1 usage/configuration, 2 data error, 3 model or schema mismatch.
"""


class SmsGuardError(Exception):
    """Base class for all smsguard errors."""

    exit_code = 1


class ConfigError(SmsGuardError):
    """Raised for unknown config keys, bad values, or missing files."""

    exit_code = 1


class DataError(SmsGuardError):
    """Raised when input data violates a precondition."""

    exit_code = 2


class LexiconError(DataError, ValueError):
    """Raised when a normalization lexicon file is invalid."""


class EntityError(DataError, ValueError):
    """Raised for invalid spans, hosts, or TLD tables."""


class ClusterError(DataError, ValueError):
    """Raised for invalid cluster sets, proposals, or mining inputs."""


class MessageError(DataError, ValueError):
    """Raised for malformed message records."""


class StreamOrderError(DataError):
    """Raised when a message arrives too far out of timestamp order."""


class TrainingError(DataError, ValueError):
    """Raised when a training set cannot produce a forest."""


class EvalError(DataError, ValueError):
    """Raised when an evaluation precondition fails."""


class GenConfigError(DataError, ValueError):
    """Raised for invalid synthetic generator configurations."""


class SchemaError(SmsGuardError):
    """Base class for feature-schema and model-format mismatches."""

    exit_code = 3


class SchemaMismatchError(SchemaError, ValueError):
    """Raised when a vector or model does not match the expected layout."""


class ModelFormatError(SchemaError):
    """Raised when a model payload is corrupt or has an unsupported version."""
