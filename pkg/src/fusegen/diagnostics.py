"""Source locations and diagnostics shared by every compiler stage."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Span:
    """Half-open character range [start, end) with the 1-based line and
    column of its first character."""

    start: int
    end: int
    line: int
    col: int

    def merge(self, other: "Span") -> "Span":
        """Smallest span covering both operands."""
        if other.start < self.start:
            first, last = other, self
        else:
            first, last = self, other
        return Span(first.start, max(first.end, last.end), first.line, first.col)


@dataclass(frozen=True)
class Diagnostic:
    """A single problem found in a source file.

    Severity is "error" or "warning".  Errors prevent code generation;
    warnings never do.
    """

    severity: str
    message: str
    file: str
    line: int
    col: int

    def render(self) -> str:
        return f"{self.file}:{self.line}:{self.col}: {self.severity}: {self.message}"


def error(message: str, file: str, span: Span) -> Diagnostic:
    return Diagnostic("error", message, file, span.line, span.col)


def warning(message: str, file: str, span: Span) -> Diagnostic:
    return Diagnostic("warning", message, file, span.line, span.col)


class SourceError(Exception):
    """Raised when a source file cannot be processed further.

    Carries the full list of diagnostics collected before the failure so
    callers can report every problem, not just the first.
    """

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        first = self.diagnostics[0].render() if self.diagnostics else "unknown error"
        extra = len(self.diagnostics) - 1
        super().__init__(first if extra <= 0 else f"{first} (+{extra} more)")
