"""Tokenizer for the contract source language."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from ..errors import LexError


class TokenKind(Enum):
    IDENT = "ident"
    NUMBER = "number"
    KEYWORD = "keyword"
    SYMBOL = "symbol"
    EOF = "eof"


KEYWORDS = {
    "contract",
    "function",
    "public",
    "returns",
    "return",
    "mapping",
    "final",
    "require",
    "if",
    "else",
    "while",
    "for",
    "true",
    "false",
    "me",
    "reveal",
    "uint",
    "uint256",
    "bool",
    "address",
    "bin",
}

# Longest symbols first so the scanner is greedy.
SYMBOLS = [
    "=>",
    "==",
    "!=",
    "<=",
    ">=",
    "&&",
    "||",
    "++",
    "--",
    "+=",
    "-=",
    "*=",
    "{",
    "}",
    "(",
    ")",
    "[",
    "]",
    ";",
    ",",
    "=",
    "<",
    ">",
    "+",
    "-",
    "*",
    "/",
    "%",
    "!",
    "@",
    "?",
    ":",
    ".",
]


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    text: str
    line: int
    col: int

    def is_symbol(self, text: str) -> bool:
        return self.kind is TokenKind.SYMBOL and self.text == text

    def is_keyword(self, text: str) -> bool:
        return self.kind is TokenKind.KEYWORD and self.text == text


def tokenize(source: str, path: str = "<input>") -> list[Token]:
    """Scan ``source`` into tokens, ending with a single EOF token."""
    tokens: list[Token] = []
    pos = 0
    line = 1
    col = 1
    n = len(source)

    def bump(text: str) -> None:
        nonlocal line, col
        for ch in text:
            if ch == "\n":
                line += 1
                col = 1
            else:
                col += 1

    while pos < n:
        ch = source[pos]
        if ch in " \t\r\n":
            bump(ch)
            pos += 1
            continue
        if source.startswith("//", pos):
            end = source.find("\n", pos)
            end = n if end < 0 else end
            bump(source[pos:end])
            pos = end
            continue
        if source.startswith("/*", pos):
            end = source.find("*/", pos + 2)
            if end < 0:
                raise LexError("unterminated block comment", line, col, path)
            bump(source[pos : end + 2])
            pos = end + 2
            continue
        if ch.isdigit():
            start = pos
            while pos < n and source[pos].isdigit():
                pos += 1
            if pos < n and (source[pos].isalpha() or source[pos] == "_"):
                raise LexError(f"malformed number near {source[start:pos + 1]!r}", line, col, path)
            text = source[start:pos]
            tokens.append(Token(TokenKind.NUMBER, text, line, col))
            bump(text)
            continue
        if ch.isalpha() or ch == "_":
            start = pos
            while pos < n and (source[pos].isalnum() or source[pos] == "_"):
                pos += 1
            text = source[start:pos]
            kind = TokenKind.KEYWORD if text in KEYWORDS else TokenKind.IDENT
            tokens.append(Token(kind, text, line, col))
            bump(text)
            continue
        for sym in SYMBOLS:
            if source.startswith(sym, pos):
                tokens.append(Token(TokenKind.SYMBOL, sym, line, col))
                bump(sym)
                pos += len(sym)
                break
        else:
            raise LexError(f"unexpected character {ch!r}", line, col, path)

    tokens.append(Token(TokenKind.EOF, "", line, col))
    return tokens
