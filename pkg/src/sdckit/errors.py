"""Exception types shared across the toolkit."""


class SDCError(Exception):
    """Base class for every error raised by sdckit."""


class ValidationError(SDCError, ValueError):
    """Invalid input data, schema, or parameter."""


class DataFormatError(ValidationError):
    """A malformed input file, with an optional row/column position."""

    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class TaxonomyError(ValidationError):
    """Taxonomy edge list is not a single-rooted acyclic hierarchy."""


class InfeasibleError(ValidationError):
    """The requested parameters admit no valid construction."""
