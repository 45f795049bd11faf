"""Exception hierarchy shared by every module."""


class RidgeError(Exception):
    """Base class for all library errors."""


class DomainError(RidgeError, ValueError):
    """A coordinate or quantity lies outside its valid domain."""

    def __init__(self, field: str, value, message: str | None = None):
        self.field = field
        self.value = value
        super().__init__(message or f"invalid {field}: {value!r}")


class ParameterError(RidgeError, ValueError):
    """A tuning parameter is out of range."""


class DegenerateDataError(RidgeError, ValueError):
    """The data cannot support the requested computation (e.g. all points coincide)."""


class ThresholdTooHighError(RidgeError):
    def __init__(self, tau: float):
        self.tau = tau
        super().__init__(f"no mesh point has density >= tau={tau!r}")


class EmptyResultError(RidgeError):
    """Every mesh point was stranded or discarded."""


class EmptyRidgesError(RidgeError, ValueError):
    """An evaluation was asked to measure against an empty ridge set."""


class IngestError(RidgeError):
    """Base class for CSV loading failures."""


class MissingFileError(IngestError, FileNotFoundError):
    pass


class SchemaError(IngestError, KeyError):
    """A configured column is absent from the header."""

    def __str__(self):
        return Exception.__str__(self)


class MalformedHeaderError(IngestError, ValueError):
    pass
