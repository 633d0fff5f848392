"""A small SQL tokenizer.

Understands identifiers (including non-ASCII letters), single-quoted string
literals with '' escaping, numbers, @variables, line and block comments,
and the punctuation the supported grammar needs.  Token offsets into the
source are kept so verbatim spans can be sliced back out.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import SqlSyntaxError

IDENT = "ident"
NUMBER = "number"
STRING = "string"
VARIABLE = "variable"
PUNCT = "punct"

_PUNCT_TWO = {"<=", ">=", "<>", "!=", "||"}
_PUNCT_ONE = set("().,;*=<>+-/%")


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    start: int
    end: int

    def upper(self) -> str:
        return self.text.upper()


def _is_ident_start(ch: str) -> bool:
    return ch == "_" or ch.isalpha()


def _is_ident_part(ch: str) -> bool:
    return ch == "_" or ch.isalnum()


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if text.startswith("--", i):
            j = text.find("\n", i)
            i = n if j < 0 else j + 1
            continue
        if text.startswith("/*", i):
            j = text.find("*/", i)
            if j < 0:
                raise SqlSyntaxError("unterminated block comment", token="/*")
            i = j + 2
            continue
        if ch == "'":
            j = i + 1
            while True:
                j = text.find("'", j)
                if j < 0:
                    raise SqlSyntaxError("unterminated string literal", token=text[i : i + 12])
                if j + 1 < n and text[j + 1] == "'":
                    j += 2
                    continue
                break
            tokens.append(Token(STRING, text[i : j + 1], i, j + 1))
            i = j + 1
            continue
        if ch == "@":
            j = i + 1
            while j < n and _is_ident_part(text[j]):
                j += 1
            if j == i + 1:
                raise SqlSyntaxError("stray '@'", token="@")
            tokens.append(Token(VARIABLE, text[i:j], i, j))
            i = j
            continue
        if ch.isdigit():
            j = i
            while j < n and (text[j].isdigit() or text[j] == "."):
                j += 1
            tokens.append(Token(NUMBER, text[i:j], i, j))
            i = j
            continue
        if _is_ident_start(ch):
            j = i
            while j < n and _is_ident_part(text[j]):
                j += 1
            tokens.append(Token(IDENT, text[i:j], i, j))
            i = j
            continue
        two = text[i : i + 2]
        if two in _PUNCT_TWO:
            tokens.append(Token(PUNCT, two, i, i + 2))
            i += 2
            continue
        if ch in _PUNCT_ONE:
            tokens.append(Token(PUNCT, ch, i, i + 1))
            i += 1
            continue
        raise SqlSyntaxError(f"unexpected character {ch!r}", token=ch)
    return tokens
