"""Tokenizer shared by the series-literal and expression parsers."""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ExprSyntaxError

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>\d+)
  | (?P<var>x\d+)
  | (?P<ident>[a-z][a-z0-9_]*)
  | (?P<X>X)
  | (?P<O>O)
  | (?P<sym>[-+*/^()\[\],;])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # num, var, ident, X, O, a symbol character, or eof
    text: str
    pos: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ExprSyntaxError(pos, ["token"], f"unexpected character {text[pos]!r}")
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(Token(m.group() if kind == "sym" else kind, m.group(), pos))
        pos = m.end()
    tokens.append(Token("eof", "", len(text)))
    return tokens


class TokenStream:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.index = 0

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.index + offset, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.peek()
        if tok.kind != "eof":
            self.index += 1
        return tok

    def accept(self, kind: str) -> Token | None:
        if self.peek().kind == kind:
            return self.next()
        return None

    def expect(self, *kinds: str) -> Token:
        tok = self.peek()
        if tok.kind not in kinds:
            raise ExprSyntaxError(tok.pos, kinds, f"expected {' or '.join(kinds)}, got {tok.text or 'end of input'!r}")
        return self.next()

    def expect_int(self) -> int:
        """Signed integer: ['-'] digits."""
        sign = -1 if self.accept("-") else 1
        return sign * int(self.expect("num").text)

    def expect_end(self) -> None:
        self.expect("eof")
