"""Exception hierarchy shared by the library and the command-line frontend.

The CLI maps the three families below onto distinct exit codes, so new
exceptions should derive from exactly one of them.
"""

from __future__ import annotations


class GvdlinkError(Exception):
    """Base class for every error raised by gvdlink."""


# --- numeric / domain failures (CLI exit code 3) ---------------------------


class NumericError(GvdlinkError):
    """A computation cannot proceed with the given numbers."""


class DomainError(NumericError, ValueError):
    """An argument lies outside the domain an operation is defined on."""


class ResolutionError(NumericError):
    """Phase unwrapping failed; the frequency grid is too coarse."""


class SpanError(NumericError):
    """An impulse response is too short for the requested symbol span."""


class BudgetError(NumericError):
    """Exhaustive displacement enumeration would exceed the row budget."""


class CalibrationError(NumericError):
    """Monte Carlo noise calibration missed the target SNR."""


class MonotonicityError(NumericError):
    """The error floor decreased with distance on the coarse search grid."""

    def __init__(self, message: str, bracket: tuple[float, float]):
        super().__init__(message)
        self.bracket = bracket


# --- input / format failures (CLI exit code 4) -----------------------------


class FormatError(GvdlinkError):
    """A data file does not follow its documented layout."""


class CatalogParseError(FormatError):
    """A line-catalog row could not be parsed."""

    def __init__(self, message: str, row: int):
        super().__init__(f"row {row}: {message}")
        self.row = row


class EmptyCatalogError(FormatError):
    """A line catalog contained no usable resonances."""


# --- configuration failures (CLI exit code 2) ------------------------------


class ConfigError(GvdlinkError):
    """A configuration file is missing keys or holds invalid values."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key
