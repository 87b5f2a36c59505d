"""Diagnostics shared across the pipeline."""

from __future__ import annotations

from .syntax import Span


class EffverError(Exception):
    """Base class for all user-facing errors."""

    def __init__(self, message: str, span: Span | None = None):
        self.message = message
        self.span = span
        super().__init__(self.render())

    def render(self) -> str:
        if self.span is not None and self.span.line:
            return f"{self.span.line}:{self.span.col}: {self.message}"
        return self.message


class SyntaxParseError(EffverError):
    def __init__(self, message: str, span: Span | None = None,
                 expected: tuple[str, ...] = ()):
        self.expected = expected
        if expected:
            message = f"{message} (expected one of: {', '.join(expected)})"
        super().__init__(message, span)


class SemaError(EffverError):
    pass


class TranslateError(EffverError):
    pass


class WfError(EffverError):
    pass


class VCGenError(EffverError):
    pass


class SmtError(EffverError):
    pass


class InterpError(EffverError):
    pass
