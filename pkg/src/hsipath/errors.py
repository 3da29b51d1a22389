"""Shared exception types.

Every raise in the package goes through one of these so callers can
distinguish bad input data from bad parameters without string matching.
"""


class HsiPathError(Exception):
    """Base class for all package errors."""


class FormatError(HsiPathError):
    """A file on disk does not conform to its declared format."""


class ValidationError(HsiPathError):
    """An in-memory value violates a documented precondition."""
