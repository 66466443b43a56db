"""Exception hierarchy shared across the engine."""

from __future__ import annotations


class SyntaxShapError(Exception):
    """Base class for all engine errors."""


class ConlluParseError(SyntaxShapError):
    """A CoNLL-U line could not be parsed; carries the 1-based line number."""

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class TreeStructureError(SyntaxShapError):
    """Head links do not form a single rooted tree.

    ``kind`` is ``"multi_span"`` (zero or multiple roots) or ``"cycle"``.
    """

    def __init__(self, message: str, kind: str):
        super().__init__(message)
        self.kind = kind


class AlignmentError(SyntaxShapError):
    """Subtoken spans do not align with the word-level tree."""


class SizeLimitError(SyntaxShapError):
    """An enumeration would exceed a hard size cap."""


class OracleError(SyntaxShapError):
    """A value-oracle evaluation failed."""


class TransportError(OracleError):
    """Remote oracle could not be reached after retries."""


class ProtocolError(OracleError):
    """Remote oracle returned an invariant-violating or malformed response."""
