"""Exception hierarchy shared by all glome modules."""


class GlomeError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(GlomeError):
    """Array shapes are incompatible with the requested operation."""


class NotPositiveDefinite(GlomeError):
    """A covariance matrix is not symmetric positive definite above the floor."""


class NonFinite(GlomeError):
    """A computation produced a NaN or infinity where a finite value is required."""


class TooFewSamples(GlomeError):
    """The sample is too small for the requested number of components."""


class AllRestartsFailed(GlomeError):
    """Every EM restart failed with a numerical error."""


class EmptyComponent(GlomeError):
    """A mixture component received (numerically) zero responsibility mass."""


class SingularDesign(GlomeError):
    """The weighted Gram matrix of the regression design is not invertible."""


class EmptyTable(GlomeError):
    """A criterion table contains no entries."""


class DegeneratePath(GlomeError):
    """The model collection has too few distinct dimensions for a jump path."""


class WindowTooSmall(GlomeError):
    """The slope-regression window contains fewer than three models."""


class SamplerMissing(GlomeError):
    """A conditional density without a sampler was used where one is required."""


class OutOfRange(GlomeError):
    """A scalar argument lies outside its admissible range."""


class MissingColumn(GlomeError):
    """A requested column is absent from the CSV header."""


class ParseError(GlomeError):
    """A CSV cell failed to parse; carries the 1-based row and column name."""

    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        super().__init__(message)
        self.row = row
        self.column = column


class SchemaVersionMismatch(GlomeError):
    """A JSON document is missing `schema_version` or carries an unsupported one."""
