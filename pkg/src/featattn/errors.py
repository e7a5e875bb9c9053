"""Exception hierarchy shared by every stage of the pipeline."""


class FeatAttnError(Exception):
    """Base class; the CLI maps subclasses to exit codes."""

    exit_code = 1


class ShapeError(FeatAttnError, ValueError):
    exit_code = 5


class DomainError(FeatAttnError, ValueError):
    exit_code = 5


class ParameterError(DomainError):
    pass


class DegenerateCohortError(DomainError):
    pass


class BatchSizeError(DomainError):
    pass


class StateError(FeatAttnError, RuntimeError):
    exit_code = 5


class ParseError(FeatAttnError, ValueError):
    exit_code = 3

    def __init__(self, message, row=None, column=None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.row = row
        self.column = column


class FormatError(ParseError):
    pass


class SchemaError(FeatAttnError, ValueError):
    exit_code = 4


class VersionError(FeatAttnError, ValueError):
    exit_code = 7


class LoadError(FeatAttnError, ValueError):
    exit_code = 7
