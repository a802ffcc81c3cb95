"""Exceptions raised by capbound."""

from __future__ import annotations


class CapboundError(Exception):
    """Base class for all capbound errors."""


class ValidationError(CapboundError, ValueError):
    """Error to indicate malformed input data."""


class DimensionMismatch(ValidationError):
    """Error to indicate incompatible matrix or vector dimensions."""


class DomainError(CapboundError, ValueError):
    """Error to indicate parameters outside the domain where a bound holds."""

    def __init__(self, message: str, threshold: float | None = None) -> None:
        super().__init__(message)
        self.threshold = threshold


class SolverFailure(CapboundError):
    """Error to indicate a semidefinite program could not be solved."""

    def __init__(self, message: str, status: str) -> None:
        super().__init__(message)
        self.status = status
