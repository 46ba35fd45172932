"""
Exception hierarchy for graph sampling and estimation.

Every failure raised by the library derives from GSHError so callers
(CLI, HTTP routes) can map it to an exit code or a status code.
"""

from typing import Optional


class GSHError(Exception):
    """Base class for all library errors."""


class ConfigError(GSHError):
    """Invalid sampler, experiment or CLI configuration."""


class EdgeListParseError(GSHError):
    """A line of an edge list could not be parsed."""

    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class EmptyGraphError(GSHError):
    """Ingestion produced no edges."""


class EmptyStreamError(GSHError):
    """An operation needs at least one edge in the stream."""


class UndefinedEstimateError(GSHError):
    """A ratio estimate has a zero denominator."""


class NegativeVarianceError(GSHError):
    """A variance passed to interval construction was negative."""


class StreamTooLargeError(GSHError):
    """Outcome enumeration refused because the stream is too long."""


class SinkError(GSHError):
    """Results could not be written to their destination."""
