"""Exception taxonomy shared by all engine modules.

Service and CLI layers map these onto HTTP statuses / exit codes, so new
error types should subclass one of the two broad categories below:
``InputError`` for problems with user-supplied files, flags or configs
(CLI exit 2), ``DomainError`` for failures inside a well-formed run
(CLI exit 1).
"""


class SenseClusterError(Exception):
    """Base class for all errors raised by this package."""


class InputError(SenseClusterError):
    """Bad user input: missing files, malformed formats, invalid flags."""


class DomainError(SenseClusterError):
    """A well-formed run failed while executing."""


class ParseError(InputError):
    """Malformed corpus/gold/graph file. Carries the offending line when known."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path:
            where = f" [{path}" + (f":{line}" if line is not None else "") + "]"
        super().__init__(message + where)


class ConfigError(InputError):
    """Invalid engine configuration (bad paths, bad scorer spec, k < 1...)."""


class NotFound(DomainError):
    """A sense id or inventory entry that should exist does not."""


class ReferentialIntegrityError(DomainError):
    """Inventory references a sense id absent from the graph."""


class PreconditionFailed(DomainError):
    """An operation was called on a graph that does not satisfy its precondition."""


class EmptyCandidates(DomainError):
    """Equivalence classes requested for an empty candidate set."""


class NoCandidates(DomainError):
    """An instance has no inventory candidates; it is counted unattempted."""


class EmptyClass(DomainError):
    """Confidence weights requested for an empty member list."""


class ShapeMismatch(DomainError):
    """Member scores do not cover exactly the class members."""


class OffsetError(DomainError):
    """Target character offsets do not fit the sentence."""


class BackendUnavailable(DomainError):
    """External scorer process/endpoint unreachable. Retriable."""

    retriable = True


class ProtocolError(DomainError):
    """External scorer violated the sandwich-scorer/1 wire protocol."""
