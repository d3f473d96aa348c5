"""Exception taxonomy shared across the package.

Every error carries an ``exit_code`` used by the CLI: 1 config,
2 IO/parsing, 3 service, 4 data mismatch.
"""


class DescboostError(Exception):
    exit_code = 1


class ConfigError(DescboostError):
    exit_code = 1


class ValidationError(DescboostError, ValueError):
    """A domain invariant was violated at construction time."""

    exit_code = 4


class ParseError(DescboostError):
    """A file could not be parsed; carries the 1-based line number."""

    exit_code = 2

    def __init__(self, path: str, line: int, reason: str):
        super().__init__(f"{path}:{line}: {reason}")
        self.path = path
        self.line = line
        self.reason = reason


class SchemaError(DescboostError):
    """A parsed row is structurally valid JSON but violates the schema."""

    exit_code = 2


class StorageError(DescboostError):
    exit_code = 2


class NotFound(StorageError):
    exit_code = 2


class ServiceError(DescboostError):
    exit_code = 3


class ServiceUnavailable(ServiceError):
    pass


class GeneratorUnavailable(ServiceError):
    pass


class ProtocolError(ServiceError):
    """The remote service answered with a malformed payload."""


class ShapeError(ServiceError):
    """A probability payload has the wrong dimensions."""


class DataMismatchError(DescboostError):
    exit_code = 4


class CorpusMismatch(DataMismatchError):
    pass


class UnknownClass(DataMismatchError):
    pass


class MissingEntityPair(DataMismatchError):
    pass


class EmptyCandidates(DataMismatchError):
    pass


class InsufficientSamples(DataMismatchError):
    pass


class GenerationEmpty(DescboostError):
    """Generation produced no usable candidates (or too few after retries)."""

    exit_code = 3
