"""Exception types shared across the package."""


class RgvixError(Exception):
    """Base class for all rgvix errors."""


class SchemaError(RgvixError, ValueError):
    """A CSV file does not provide the requested columns."""


class DataError(RgvixError, ValueError):
    """Input data violates an invariant; the message names the row/date."""


class NumericError(RgvixError, ArithmeticError):
    """A variance recursion left the admissible numeric range.

    Raised instead of silently clamping so that diverging parameter
    trials inside an optimizer are distinguishable from data errors.
    """


class PricingError(RgvixError, ArithmeticError):
    """A closed-form pricing expression diverges for these parameters."""


class EstimationError(RgvixError, RuntimeError):
    """Estimation could not produce a usable result."""


class DegenerateInputError(RgvixError, ValueError):
    """An input series is degenerate for the requested computation."""
