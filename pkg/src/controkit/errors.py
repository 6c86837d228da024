"""Exception hierarchy shared across the package."""


class ControkitError(Exception):
    """Base class for all controkit errors."""


class UsageError(ControkitError):
    """The caller asked for something the API cannot do (bad arguments,
    missing preconditions such as a single-class corpus)."""


class DomainError(ControkitError):
    """A numeric argument is outside its valid domain (e.g. dropout rate)."""


class DimensionError(ControkitError):
    """Array shapes do not line up for the requested operation."""


class DataFormatError(ControkitError):
    """A file or byte stream does not match its documented format.

    ``offset`` (bytes) or ``line`` (1-based) locate the problem when known.
    """

    def __init__(self, message, offset=None, line=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)
        self.offset = offset
        self.line = line


class IntegrityError(ControkitError):
    """Internal consistency violated (e.g. a crawled page not reachable
    from any seed); indicates a bug rather than bad input."""


class NumericError(ControkitError):
    """A numeric computation produced NaN/Inf or diverged."""
