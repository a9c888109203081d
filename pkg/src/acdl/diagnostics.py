"""Source spans and diagnostics shared by every stage of the toolchain."""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum


class Severity(str, Enum):
    ERROR = "error"
    WARNING = "warning"
    INFO = "info"


@dataclass(frozen=True)
class Span:
    """Byte-offset extent of a token or node, with 1-based line/col of its start."""

    start: int
    end: int
    line: int
    col: int

    def to_json(self) -> dict:
        return {"start": self.start, "end": self.end, "line": self.line, "col": self.col}


EMPTY_SPAN = Span(0, 0, 1, 1)


@dataclass(frozen=True)
class Diagnostic:
    code: str
    severity: Severity
    message: str
    span: Span
    file: str = "<memory>"

    def to_json(self) -> dict:
        return {
            "code": self.code,
            "severity": self.severity.value,
            "message": self.message,
            "span": self.span.to_json(),
            "file": self.file,
        }

    def to_line(self) -> str:
        """Human-readable one-liner: file:line:col: severity[CODE]: message."""
        return (
            f"{self.file}:{self.span.line}:{self.span.col}: "
            f"{self.severity.value}[{self.code}]: {self.message}"
        )


def error(code: str, message: str, span: Span, file: str = "<memory>") -> Diagnostic:
    return Diagnostic(code, Severity.ERROR, message, span, file)


def warning(code: str, message: str, span: Span, file: str = "<memory>") -> Diagnostic:
    return Diagnostic(code, Severity.WARNING, message, span, file)


def info(code: str, message: str, span: Span, file: str = "<memory>") -> Diagnostic:
    return Diagnostic(code, Severity.INFO, message, span, file)


def has_errors(diags: list[Diagnostic]) -> bool:
    return any(d.severity is Severity.ERROR for d in diags)


def only_errors(diags: list[Diagnostic]) -> list[Diagnostic]:
    return [d for d in diags if d.severity is Severity.ERROR]


def to_jsonl(diags: list[Diagnostic]) -> str:
    """One JSON object per line, stable key order."""
    return "\n".join(json.dumps(d.to_json(), ensure_ascii=False) for d in diags)
