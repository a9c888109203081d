"""ACDL toolchain: parse, format, validate, expand, render, diff, and
conformance-check Agentic Context Description Language files."""

from importlib import resources

from .diagnostics import Diagnostic, Severity, Span
from .formatter import format_document
from .lexer import Token, TokenKind, tokenize
from .parser import parse

__version__ = "0.1.0"

__all__ = [
    "Diagnostic", "Severity", "Span", "Token", "TokenKind",
    "tokenize", "parse", "format_document",
    "corpus_names", "corpus_source",
]


def corpus_names() -> list[str]:
    """Names of the bundled example specifications (without extension)."""
    root = resources.files(__name__) / "corpus"
    return sorted(p.name[:-5] for p in root.iterdir()
                  if p.name.endswith(".acdl"))


def corpus_source(name: str) -> str:
    """Source text of a bundled example."""
    root = resources.files(__name__) / "corpus"
    return (root / f"{name}.acdl").read_text(encoding="utf-8")
