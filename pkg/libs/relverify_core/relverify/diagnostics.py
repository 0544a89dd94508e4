from __future__ import annotations

from dataclasses import dataclass
from typing import FrozenSet, Optional


@dataclass(frozen=True)
class Span:
    """Source position of a node: file path plus 1-based line and column."""

    path: str
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.path}:{self.line}:{self.col}"


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    message: str
    span: Optional[Span] = None

    def format(self) -> str:
        where = str(self.span) if self.span is not None else "<input>"
        return f"{where}: {self.severity}: {self.message}"


class RelverifyError(Exception):
    """Base class for pipeline errors.

    Carries a short machine code (``parse``, ``link``, ``type`` ...), the human
    message, and the source span when one is known.
    """

    code = "error"

    def __init__(self, message: str, span: Optional[Span] = None):
        super().__init__(message)
        self.message = message
        self.span = span

    def diagnostic(self) -> Diagnostic:
        return Diagnostic("error", f"[{self.code}] {self.message}", self.span)


class ParseError(RelverifyError):
    code = "parse"

    def __init__(self, message: str, span: Optional[Span] = None, expected: FrozenSet[str] = frozenset()):
        if expected:
            message = f"{message}; expected one of: {', '.join(sorted(expected))}"
        super().__init__(message, span)
        self.expected = expected


class LinkError(RelverifyError):
    code = "link"


class TypecheckError(RelverifyError):
    code = "type"


class AlignmentError(RelverifyError):
    code = "align"


class AdequacyError(RelverifyError):
    code = "adequacy"

    def __init__(self, message: str, span: Optional[Span] = None, report=None):
        super().__init__(message, span)
        self.report = report


class VcgenError(RelverifyError):
    code = "vcgen"


class SolverError(RelverifyError):
    code = "solver"


class InterpError(RelverifyError):
    code = "interp"


__all__ = [
    "Span",
    "Diagnostic",
    "RelverifyError",
    "ParseError",
    "LinkError",
    "TypecheckError",
    "AlignmentError",
    "AdequacyError",
    "VcgenError",
    "SolverError",
    "InterpError",
]
