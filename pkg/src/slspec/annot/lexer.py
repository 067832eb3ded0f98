"""Tokenizer shared by the annotation, Coq-term and definition parsers."""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import AnnotSyntaxError

# Longest operators first; the Coq-only spellings are lexed so the parser can
# report them precisely instead of failing on a stray character.
OPERATORS = (
    "::", "==", "!=", "<=", ">=", "&&", "||", "->", ":=", "=>", "/\\", "\\/", "<>",
    "(", ")", ",", ":", "*", "+", "-", "/", "%", "<", ">", "=", "&", ".", "[", "]",
    "|", "~", "!", ";", "{", "}",
)

_TOKEN_RE = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<int>\d+)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_']*)"
    r"|(?P<op>" + "|".join(re.escape(op) for op in OPERATORS) + ")"
)


@dataclass(frozen=True)
class Token:
    kind: str  # "int" | "ident" | "op" | "eof"
    text: str
    pos: int

    def is_op(self, *ops: str) -> bool:
        return self.kind == "op" and self.text in ops

    def is_word(self, *words: str) -> bool:
        return self.kind == "ident" and self.text in words

    def describe(self) -> str:
        return "end of input" if self.kind == "eof" else repr(self.text)


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise AnnotSyntaxError(
                f"unexpected character {text[pos]!r}", pos, expected=(), found=text[pos]
            )
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(Token(kind, m.group(), pos))
        pos = m.end()
    tokens.append(Token("eof", "", len(text)))
    return tokens


class TokenStream:
    """Cursor over a token list with save/restore for backtracking."""

    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0

    @property
    def peek(self) -> Token:
        return self.tokens[self.i]

    def ahead(self, k: int = 1) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.tokens[self.i]
        if tok.kind != "eof":
            self.i += 1
        return tok

    def accept_op(self, *ops: str) -> Token | None:
        if self.peek.is_op(*ops):
            return self.next()
        return None

    def accept_word(self, *words: str) -> Token | None:
        if self.peek.is_word(*words):
            return self.next()
        return None

    def expect_op(self, op: str) -> Token:
        if not self.peek.is_op(op):
            self.fail({repr(op)})
        return self.next()

    def expect_word(self, word: str) -> Token:
        if not self.peek.is_word(word):
            self.fail({repr(word)})
        return self.next()

    def expect_ident(self) -> Token:
        if self.peek.kind != "ident":
            self.fail({"identifier"})
        return self.next()

    def fail(self, expected, tok: Token | None = None):
        tok = tok or self.peek
        exp = sorted(expected)
        # Coq spellings inside annotations get the exact phrasing the
        # diagnostic rules key on.
        hint = CONFUSABLE.get(tok.text) if tok.kind == "op" else None
        if hint:
            msg = f"expected {hint} but found '{tok.text}'"
            raise AnnotSyntaxError(msg, tok.pos, expected={hint}, found=tok.text)
        want = " or ".join(exp) if exp else "a different token"
        raise AnnotSyntaxError(
            f"expected {want} but found {tok.describe()}", tok.pos, expected=exp, found=tok.text
        )


# Coq (or C) spelling -> the annotation-language operator that was meant.
CONFUSABLE = {
    "=": "'=='",
    "/\\": "'&&'",
    "\\/": "'||'",
    "<>": "'!='",
    ":=": "'=='",
}
