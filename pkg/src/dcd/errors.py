"""Exception hierarchy shared across the package."""

from __future__ import annotations


class DcdError(Exception):
    """Base class for all errors raised by this package."""


# --- CSV ingestion ---------------------------------------------------------

class ParseError(DcdError):
    """A cell or row could not be parsed; carries the 1-based location."""

    def __init__(self, message: str, row: int | None = None, col: int | None = None):
        self.row = row
        self.col = col
        loc = ""
        if row is not None:
            loc = f" (row {row}" + (f", col {col})" if col is not None else ")")
        super().__init__(message + loc)


class EmptyFileError(ParseError):
    pass


class RaggedRowsError(ParseError):
    pass


class NonNumericCellError(ParseError):
    pass


class TooFewRowsError(ParseError):
    pass


# --- decomposition ---------------------------------------------------------

class SeriesTooShortError(DcdError):
    pass


class PeriodTooLargeError(DcdError):
    pass


class AllComponentsDegenerateError(DcdError):
    pass


# --- stationarity ----------------------------------------------------------

class ConstantSeriesError(DcdError):
    pass


class SingularDesignError(DcdError):
    pass


# --- kernel dependence -----------------------------------------------------

class DegenerateBandwidthError(DcdError):
    pass


# --- residual discovery ----------------------------------------------------

class TooShortForLagError(DcdError):
    pass


class SingularConditioningSetError(DcdError):
    pass


# --- graphs and serialization ----------------------------------------------

class IndexOutOfRangeError(DcdError):
    pass


class VariableMismatchError(DcdError):
    pass


class SchemaVersionMismatchError(DcdError):
    pass


class MalformedDocumentError(DcdError):
    pass


# --- generator and configuration -------------------------------------------

class InvalidSpecError(DcdError):
    pass


class ConfigError(DcdError):
    """Invalid run configuration (CLI exit code 2)."""


class PipelineError(DcdError):
    """Failure inside a pipeline stage, labelled with the stage name."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}': {cause}")
