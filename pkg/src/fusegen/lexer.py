"""Tokenizer for system description files."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, auto

from .diagnostics import SourceError, Span, error


class TokenType(Enum):
    IDENT = auto()
    NUMBER = auto()
    STRING = auto()
    COLON = auto()
    SEMICOLON = auto()
    COMMA = auto()
    EQUALS = auto()
    TILDE = auto()
    PLUS = auto()
    MINUS = auto()
    STAR = auto()
    SLASH = auto()
    DOUBLE_STAR = auto()
    LPAREN = auto()
    RPAREN = auto()
    LBRACE = auto()
    RBRACE = auto()
    EOF = auto()


_SINGLE_CHAR = {
    ":": TokenType.COLON,
    ";": TokenType.SEMICOLON,
    ",": TokenType.COMMA,
    "=": TokenType.EQUALS,
    "~": TokenType.TILDE,
    "+": TokenType.PLUS,
    "-": TokenType.MINUS,
    "/": TokenType.SLASH,
    "(": TokenType.LPAREN,
    ")": TokenType.RPAREN,
    "{": TokenType.LBRACE,
    "}": TokenType.RBRACE,
}


@dataclass(frozen=True)
class Token:
    type: TokenType
    text: str
    span: Span
    value: float | None = None  # set for NUMBER tokens


def tokenize(source: str, filename: str = "<input>") -> list[Token]:
    """Split *source* into tokens.

    Comments run from ``#`` to end of line.  Raises SourceError on the
    first character that cannot start a token.
    """
    tokens: list[Token] = []
    pos = 0
    line = 1
    col = 1
    n = len(source)

    def span_from(start: int, start_line: int, start_col: int) -> Span:
        return Span(start, pos, start_line, start_col)

    while pos < n:
        ch = source[pos]
        if ch == "\n":
            pos += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            pos += 1
            col += 1
            continue
        if ch == "#":
            while pos < n and source[pos] != "\n":
                pos += 1
                col += 1
            continue

        start, start_line, start_col = pos, line, col

        if ch.isalpha() or ch == "_":
            while pos < n and (source[pos].isalnum() or source[pos] == "_"):
                pos += 1
                col += 1
            text = source[start:pos]
            tokens.append(Token(TokenType.IDENT, text, span_from(start, start_line, start_col)))
            continue

        if ch.isdigit():
            while pos < n and source[pos].isdigit():
                pos += 1
                col += 1
            if pos < n and source[pos] == "." and pos + 1 < n and source[pos + 1].isdigit():
                pos += 1
                col += 1
                while pos < n and source[pos].isdigit():
                    pos += 1
                    col += 1
            if pos < n and source[pos] in "eE":
                lookahead = pos + 1
                if lookahead < n and source[lookahead] in "+-":
                    lookahead += 1
                if lookahead < n and source[lookahead].isdigit():
                    col += lookahead - pos
                    pos = lookahead
                    while pos < n and source[pos].isdigit():
                        pos += 1
                        col += 1
            text = source[start:pos]
            tokens.append(
                Token(
                    TokenType.NUMBER,
                    text,
                    span_from(start, start_line, start_col),
                    value=float(text),
                )
            )
            continue

        if ch == '"':
            pos += 1
            col += 1
            while pos < n and source[pos] not in '"\n':
                pos += 1
                col += 1
            if pos >= n or source[pos] != '"':
                raise SourceError(
                    [error("unterminated string literal", filename, span_from(start, start_line, start_col))]
                )
            pos += 1
            col += 1
            text = source[start + 1 : pos - 1]
            tokens.append(Token(TokenType.STRING, text, span_from(start, start_line, start_col)))
            continue

        if ch == "*":
            pos += 1
            col += 1
            if pos < n and source[pos] == "*":
                pos += 1
                col += 1
                tokens.append(
                    Token(TokenType.DOUBLE_STAR, "**", span_from(start, start_line, start_col))
                )
            else:
                tokens.append(Token(TokenType.STAR, "*", span_from(start, start_line, start_col)))
            continue

        if ch in _SINGLE_CHAR:
            pos += 1
            col += 1
            tokens.append(Token(_SINGLE_CHAR[ch], ch, span_from(start, start_line, start_col)))
            continue

        pos += 1
        col += 1
        raise SourceError(
            [error(f"unexpected character {ch!r}", filename, span_from(start, start_line, start_col))]
        )

    tokens.append(Token(TokenType.EOF, "", Span(pos, pos, line, col)))
    return tokens
