"""Exception hierarchy shared by the library and the command-line front end."""


class WageShareError(Exception):
    """Base class for all errors raised by ``wageshare``."""


class DomainError(WageShareError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class NumericError(WageShareError, ArithmeticError):
    """A computation produced a non-finite or otherwise unusable value."""


class SingularityError(NumericError):
    """The regressor matrix is rank deficient or numerically singular."""


class IngestError(WageShareError):
    """A source file is missing, unreadable or malformed."""


class GapError(IngestError):
    """A series lacks observations for required years."""

    def __init__(self, message, missing_years=()):
        super().__init__(message)
        self.missing_years = tuple(missing_years)


class ValidationError(WageShareError, ValueError):
    """Panel rows violate a structural invariant (ordering, duplicates, ranges)."""


class ConfigurationError(WageShareError):
    """Inputs are individually valid but inconsistent with each other."""


class FetchError(WageShareError):
    """Base class for failures of the FRED download client."""


class RetryableFetchError(FetchError):
    """Transient network or server failure; retrying may succeed."""


class PermanentFetchError(FetchError):
    """The request cannot succeed as issued (unknown series, bad key)."""
