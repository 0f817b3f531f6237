"""Exception types shared across the package.

The CLI maps these onto exit codes: configuration problems exit 1, data
problems exit 2, and everything else (including compute-level failures
such as count overflow) exits 3.
"""


class RecommenderError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(RecommenderError):
    """Invalid configuration or command-line usage."""


class DataError(RecommenderError):
    """Problem with an input file or its contents."""


class SchemaMismatchError(DataError):
    """A record carries a behavior label not present in the schema."""


class EmptyDatasetError(DataError):
    """No usable interaction records were supplied."""


class PatternCapacityError(RecommenderError):
    """Pattern enumeration would exceed the platform's addressable size."""


class CountOverflowError(RecommenderError):
    """A walk-count chain product could exceed the 64-bit range."""


class DegenerateStatisticsError(RecommenderError):
    """Unsmoothed fit requested while a pattern has an empty count sum."""
