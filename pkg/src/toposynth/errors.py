"""Exception hierarchy shared by all toposynth modules."""


class ToposynthError(ValueError):
    """Base class for every error raised by the package."""


class LimitExceededError(ToposynthError):
    """An exhaustive oracle was asked to handle an instance above its size cap."""


class NotStronglyConnectedError(ToposynthError):
    pass


class DisconnectedGraphError(ToposynthError):
    pass


class OddNodeCountError(ToposynthError):
    pass


class OddDegreeError(ToposynthError):
    pass


class NotATreeError(ToposynthError):
    pass


class DirectedOverlayUnsupportedError(ToposynthError):
    pass


class LengthMismatchError(ToposynthError):
    pass


class UnderlayValidationError(ToposynthError):
    """An underlay file parsed but violates a schema rule or invariant."""


class UnderlayParseError(ToposynthError):
    """An underlay file is not well-formed JSON/GraphML."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}, column {column})"
        super().__init__(message + where)
