"""Tokenizer for .acdl source text.

Newlines and comments are emitted as tokens: the parser treats newlines as
soft statement terminators and keeps comments in the AST.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from .diagnostics import Diagnostic, Span, error


class TokenKind(str, Enum):
    KEYWORD = "keyword"
    ROLE_MARKER = "role-marker"
    IDENTIFIER = "identifier"
    ALL_CAPS = "all-caps-identifier"
    NUMBER = "number"
    OPERATOR = "operator"
    PUNCT = "punctuation"
    TIME_REF = "time-ref"
    NAME_REF = "name-ref"
    INLINE_LITERAL = "inline-literal"
    COMMENT = "comment"
    NEWLINE = "newline"
    EOF = "eof"


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    lexeme: str
    span: Span


KEYWORDS = frozenset({
    "ForEach", "If", "ElseIf", "Else", "Switch", "Case", "Default",
    "Mark", "Name", "Frag", "StrFrag", "RolesFrag", "RoleFrag",
    "PromptEndsHere", "when", "break", "continue", "for", "in",
})

ROLE_LETTERS = frozenset("SUATN")

# Base is a letter run or a bare number (@1); dotted parts are names, numbers, or *.
_TIME_REF_RE = re.compile(r"@(?:[A-Za-z]+|[0-9]+)(?:\.(?:[A-Za-z_][A-Za-z0-9_]*|[0-9]+|\*))*")
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_NUMBER_RE = re.compile(r"[0-9]+")
_ALL_CAPS_RE = re.compile(r"[A-Z][A-Z0-9_]*\Z")

_TWO_CHAR_OPS = ("==", "!=", "<=", ">=", "&&", "||", ":=")
_ONE_CHAR_OPS = "+-*/%<>&|"
_PUNCT = "(){}[],.:"


def tokenize(source: str, file: str = "<memory>") -> tuple[list[Token], list[Diagnostic]]:
    """Scan source into tokens; illegal characters become diagnostics and are skipped."""
    tokens: list[Token] = []
    diags: list[Diagnostic] = []
    pos = 0
    line = 1
    col = 1
    n = len(source)

    def span(start: int, end: int, sl: int, sc: int) -> Span:
        return Span(start, end, sl, sc)

    def emit(kind: TokenKind, start: int, end: int, sl: int, sc: int) -> None:
        tokens.append(Token(kind, source[start:end], span(start, end, sl, sc)))

    while pos < n:
        ch = source[pos]
        start, sl, sc = pos, line, col

        if ch == "\r" and pos + 1 < n and source[pos + 1] == "\n":
            emit(TokenKind.NEWLINE, pos, pos + 2, sl, sc)
            pos += 2
            line += 1
            col = 1
            continue
        if ch == "\n":
            emit(TokenKind.NEWLINE, pos, pos + 1, sl, sc)
            pos += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            pos += 1
            col += 1
            continue

        if source.startswith("//", pos):
            end = source.find("\n", pos)
            if end == -1:
                end = n
            if end > 0 and source[end - 1] == "\r":
                end -= 1
            emit(TokenKind.COMMENT, pos, end, sl, sc)
            col += end - pos
            pos = end
            continue

        if source.startswith("{{", pos):
            end = source.find("}}", pos + 2)
            if end == -1:
                diags.append(error("E-UNTERMINATED", "unterminated {{...}} literal",
                                   span(pos, min(pos + 2, n), sl, sc), file))
                end = source.find("\n", pos)
                end = n if end == -1 else end
            else:
                end += 2
            emit(TokenKind.INLINE_LITERAL, pos, end, sl, sc)
            col += end - pos
            pos = end
            continue

        if ch == '"':
            end = source.find('"', pos + 1)
            nl = source.find("\n", pos + 1)
            if end == -1 or (nl != -1 and nl < end):
                diags.append(error("E-UNTERMINATED", "unterminated string literal",
                                   span(pos, pos + 1, sl, sc), file))
                end = nl if nl != -1 else n
            else:
                end += 1
            emit(TokenKind.INLINE_LITERAL, pos, end, sl, sc)
            col += end - pos
            pos = end
            continue

        if ch == "@":
            m = _TIME_REF_RE.match(source, pos)
            if m:
                emit(TokenKind.TIME_REF, pos, m.end(), sl, sc)
                col += m.end() - pos
                pos = m.end()
            else:
                diags.append(error("E-BAD-CHAR", "stray @ without a time variable",
                                   span(pos, pos + 1, sl, sc), file))
                pos += 1
                col += 1
            continue

        if ch == "$":
            m = _IDENT_RE.match(source, pos + 1)
            if m:
                emit(TokenKind.NAME_REF, pos, m.end(), sl, sc)
                col += m.end() - pos
                pos = m.end()
            else:
                diags.append(error("E-BAD-CHAR", "stray $ without a name",
                                   span(pos, pos + 1, sl, sc), file))
                pos += 1
                col += 1
            continue

        if ch.isdigit():
            m = _NUMBER_RE.match(source, pos)
            emit(TokenKind.NUMBER, pos, m.end(), sl, sc)
            col += m.end() - pos
            pos = m.end()
            continue

        if ch.isalpha() or ch == "_":
            m = _IDENT_RE.match(source, pos)
            lexeme = m.group()
            end = m.end()
            if lexeme in KEYWORDS:
                kind = TokenKind.KEYWORD
            elif (len(lexeme) == 1 and lexeme in ROLE_LETTERS
                    and end < n and source[end] == ":"):
                kind = TokenKind.ROLE_MARKER
                end += 1
            elif _ALL_CAPS_RE.match(lexeme):
                kind = TokenKind.ALL_CAPS
            else:
                kind = TokenKind.IDENTIFIER
            emit(kind, pos, end, sl, sc)
            col += end - pos
            pos = end
            continue

        two = source[pos:pos + 2]
        if two in _TWO_CHAR_OPS:
            emit(TokenKind.OPERATOR, pos, pos + 2, sl, sc)
            pos += 2
            col += 2
            continue
        if ch in _ONE_CHAR_OPS:
            emit(TokenKind.OPERATOR, pos, pos + 1, sl, sc)
            pos += 1
            col += 1
            continue
        if ch in _PUNCT:
            emit(TokenKind.PUNCT, pos, pos + 1, sl, sc)
            pos += 1
            col += 1
            continue

        diags.append(error("E-BAD-CHAR", f"illegal character {ch!r}",
                           span(pos, pos + 1, sl, sc), file))
        pos += 1
        col += 1

    tokens.append(Token(TokenKind.EOF, "", Span(n, n, line, col)))
    return tokens, diags
