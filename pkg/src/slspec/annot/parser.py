"""Recursive-descent parsers for annotation payloads and Coq-style terms.

Assertion precedence, loosest first (frozen; see docs/grammar.md)::

    exists x y, A      binder, body extends as far right as possible
    A || B             left associative
    A && B             left associative
    A * B              separating conjunction, left associative
    t1 == t2 ...       relational atoms (== != < <= > >=), non associative
    t1 :: t2           right associative
    t1 + t2, t1 - t2   left associative
    t1 * t2, / , %     left associative; only inside parentheses/arguments
    -t, &t             prefix
    t->f, t.f          postfix
"""

from __future__ import annotations

from ..errors import AnnotSyntaxError
from .ast import (
    RELOPS,
    AddrOf,
    App,
    BinOp,
    Cons,
    DataAt,
    Disj,
    Emp,
    Exists,
    ExternDecl,
    Field,
    FunctionSpec,
    IntLit,
    Neg,
    Pred,
    Pure,
    PureConj,
    SepConj,
    Store,
    Var,
)
from .lexer import TokenStream

KEYWORDS = frozenset({"With", "Require", "Ensure", "Inv", "Assert", "Extern", "Coq", "exists", "emp"})
BASE_SORTS = ("Z", "tree", "ptr", "Assertion", "Prop", "bool", "nat")


class _Parser:
    def __init__(self, text: str):
        self.ts = TokenStream(text)
        self.depth = 0  # >0 inside parentheses / call arguments

    # -- terms (annotation dialect) ------------------------------------------

    def term(self):
        head = self.additive()
        if self.ts.accept_op("::"):
            return Cons(head, self.term())
        return head

    def additive(self):
        t = self.multiplicative()
        while self.ts.peek.is_op("+", "-"):
            op = self.ts.next().text
            t = BinOp(op, t, self.multiplicative())
        return t

    def multiplicative(self):
        t = self.unary()
        while self.ts.peek.is_op("/", "%") or (self.depth > 0 and self.ts.peek.is_op("*")):
            op = self.ts.next().text
            t = BinOp(op, t, self.unary())
        return t

    def unary(self):
        if self.ts.accept_op("-"):
            if self.ts.peek.kind == "int":
                return IntLit(-int(self.ts.next().text))
            return Neg(self.unary())
        if self.ts.accept_op("&"):
            return AddrOf(self.unary())
        return self.postfix()

    def postfix(self):
        t = self.primary()
        while self.ts.peek.is_op("->", "."):
            arrow = self.ts.next().text == "->"
            t = Field(t, self.ts.expect_ident().text, arrow)
        return t

    def primary(self):
        tok = self.ts.peek
        if tok.kind == "int":
            self.ts.next()
            return IntLit(int(tok.text))
        if tok.kind == "ident":
            if tok.text in KEYWORDS:
                self.ts.fail({"term"})
            self.ts.next()
            if self.ts.accept_op("("):
                self.depth += 1
                args = []
                if not self.ts.peek.is_op(")"):
                    args.append(self.term())
                    while self.ts.accept_op(","):
                        args.append(self.term())
                self.ts.expect_op(")")
                self.depth -= 1
                return App(tok.text, tuple(args))
            return Var(tok.text)
        if tok.is_op("("):
            self.ts.next()
            self.depth += 1
            t = self.term()
            self.ts.expect_op(")")
            self.depth -= 1
            return t
        self.ts.fail({"term"})

    # -- assertions -----------------------------------------------------------

    def assertion(self):
        if self.ts.peek.is_word("exists"):
            return self.exists()
        a = self.conj()
        while self.ts.peek.is_op("||"):
            self.connective()
            a = Disj(a, self.conj_or_exists())
        return a

    def conj_or_exists(self):
        return self.exists() if self.ts.peek.is_word("exists") else self.conj()

    def exists(self):
        self.ts.expect_word("exists")
        names = [self.ts.expect_ident().text]
        while self.ts.peek.kind == "ident" and self.ts.peek.text not in KEYWORDS:
            names.append(self.ts.next().text)
        self.ts.expect_op(",")
        return Exists(tuple(names), self.assertion())

    def conj(self):
        a = self.sep()
        while self.ts.peek.is_op("&&"):
            self.connective()
            if self.ts.peek.is_word("exists"):
                return PureConj(a, self.exists())
            a = PureConj(a, self.sep())
        return a

    def sep(self):
        a = self.atom()
        while self.ts.peek.is_op("*"):
            self.connective()
            if self.ts.peek.is_word("exists"):
                return SepConj(a, self.exists())
            a = SepConj(a, self.atom())
        return a

    def connective(self):
        op = self.ts.next()
        nxt = self.ts.peek
        if nxt.kind == "eof" or nxt.is_op(")", ",", "*", "&&", "||") or nxt.is_word(
            "Require", "Ensure", "With"
        ):
            raise AnnotSyntaxError(
                f"dangling '{op.text}': expected an assertion after it",
                op.pos,
                expected={"assertion"},
                found=op.text,
            )

    def atom(self):
        tok = self.ts.peek
        if tok.is_word("emp"):
            self.ts.next()
            return Emp()
        if tok.is_word("exists"):
            return self.exists()
        # A relation is tried first; on failure rewind and read a predicate or
        # a parenthesized assertion.
        save, depth = self.ts.i, self.depth
        try:
            return self.relation()
        except AnnotSyntaxError as rel_err:
            rel_pos = rel_err.position
            self.ts.i, self.depth = save, depth
            if tok.is_op("("):
                self.ts.next()
                inner_depth = self.depth
                self.depth = 0
                try:
                    a = self.assertion()
                    self.ts.expect_op(")")
                except AnnotSyntaxError as err:
                    # report whichever reading got further
                    raise (err if err.position >= rel_pos else rel_err)
                self.depth = inner_depth
                return a
            if tok.kind == "ident" and tok.text not in KEYWORDS and self.ts.ahead().is_op("("):
                return self.predicate(rel_err)
            raise

    def relation(self):
        lhs = self.term()
        tok = self.ts.peek
        if tok.is_op(*RELOPS):
            self.ts.next()
            return Pure(tok.text, lhs, self.term())
        self.ts.fail({repr(op) for op in RELOPS})

    def predicate(self, rel_err):
        name = self.ts.next().text
        self.ts.expect_op("(")
        self.depth += 1
        args = []
        if not self.ts.peek.is_op(")"):
            args.append(self.term())
            while self.ts.accept_op(","):
                args.append(self.term())
        self.ts.expect_op(")")
        self.depth -= 1
        # `p(x) == 3` style relations were already tried; anything that now
        # continues as a term means the relation error is the informative one
        if self.ts.peek.is_op("+", "-", "::", "/", "%", "->", ".", "=", "<>"):
            raise rel_err
        if name == "store":
            _arity(name, args, 2, self.ts)
            return Store(args[0], args[1])
        if name == "data_at":
            _arity(name, args, 2, self.ts)
            return DataAt(args[0], args[1])
        return Pred(name, tuple(args))

    # -- sorts ----------------------------------------------------------------

    def sort(self) -> str:
        parts = [self.sort_app()]
        while self.ts.accept_op("->"):
            parts.append(self.sort_app())
        return " -> ".join(parts)

    def sort_app(self) -> str:
        if self.ts.accept_op("("):
            s = self.sort()
            self.ts.expect_op(")")
            return f"({s})" if "->" in s else s
        tok = self.ts.expect_ident()
        if tok.text == "list":
            return f"list {self._sort_atom()}"
        return tok.text

    def _sort_atom(self) -> str:
        if self.ts.accept_op("("):
            s = self.sort()
            self.ts.expect_op(")")
            return f"({s})" if " " in s else s
        tok = self.ts.expect_ident()
        if tok.text == "list":
            return f"(list {self._sort_atom()})"
        return tok.text

    # -- block payloads -------------------------------------------------------

    def funcspec(self) -> FunctionSpec:
        params = []
        if self.ts.accept_word("With"):
            if not self.ts.peek.is_op("("):
                self.ts.fail({"'('"})
            while self.ts.accept_op("("):
                names = [self.ts.expect_ident().text]
                while self.ts.peek.kind == "ident":
                    names.append(self.ts.next().text)
                self.ts.expect_op(":")
                s = self.sort()
                self.ts.expect_op(")")
                params.extend((n, s) for n in names)
        self.ts.expect_word("Require")
        require = self.assertion()
        self.ts.expect_word("Ensure")
        ensure = self.assertion()
        self.end()
        return FunctionSpec(tuple(params), require, ensure)

    def extern(self) -> tuple:
        self.ts.expect_word("Extern")
        self.ts.expect_word("Coq")
        decls = []
        self.ts.expect_op("(")
        while True:
            name = self.ts.expect_ident().text
            self.ts.expect_op(":")
            parts = [self.sort_app()]
            while self.ts.accept_op("->"):
                parts.append(self.sort_app())
            self.ts.expect_op(")")
            decls.append(ExternDecl(name, tuple(parts[:-1]), parts[-1]))
            if not self.ts.accept_op("("):
                break
        self.end()
        return tuple(decls)

    def inv(self):
        self.ts.expect_word("Inv")
        self.ts.expect_word("Assert")
        a = self.assertion()
        self.end()
        return a

    def end(self):
        if self.ts.peek.kind != "eof":
            self.ts.fail({"end of annotation"})


def _arity(name, args, n, ts):
    if len(args) != n:
        raise AnnotSyntaxError(
            f"{name} expects {n} arguments but got {len(args)}", ts.peek.pos, expected=(), found=name
        )


def _run(text: str, method: str):
    p = _Parser(text)
    try:
        result = getattr(p, method)()
        if method in ("assertion", "sort"):
            p.end()
        return result
    except AnnotSyntaxError as err:
        raise err.located(text)


def parse_term(text: str):
    """Parse an annotation-dialect term (``f(a, b)`` application)."""
    p = _Parser(text)
    p.depth = 1
    try:
        t = p.term()
        p.end()
        return t
    except AnnotSyntaxError as err:
        raise err.located(text)


def parse_assertion(text: str, sorts=None):
    """Parse an assertion; with a sort environment also sort-check it."""
    a = _run(text, "assertion")
    if sorts is not None:
        from .sorts import check_assertion

        check_assertion(a, sorts)
    return a


def parse_sort(text: str) -> str:
    return _run(text, "sort")


def parse_funcspec(text: str) -> FunctionSpec:
    return _run(text, "funcspec")


def parse_extern(text: str) -> tuple:
    return _run(text, "extern")


def parse_inv(text: str):
    return _run(text, "inv")


# -- Coq dialect terms ------------------------------------------------------


class _CoqParser:
    """Juxtaposition application, ``::``, infix arithmetic and ``mod``."""

    def __init__(self, text: str):
        self.ts = TokenStream(text)

    def term(self):
        head = self.additive()
        if self.ts.accept_op("::"):
            return Cons(head, self.term())
        return head

    def additive(self):
        t = self.multiplicative()
        while self.ts.peek.is_op("+", "-"):
            op = self.ts.next().text
            t = BinOp(op, t, self.multiplicative())
        return t

    def multiplicative(self):
        t = self.unary()
        while self.ts.peek.is_op("*", "/") or self.ts.peek.is_word("mod"):
            tok = self.ts.next()
            t = BinOp("%" if tok.text == "mod" else tok.text, t, self.unary())
        return t

    def unary(self):
        if self.ts.accept_op("-"):
            if self.ts.peek.kind == "int":
                return IntLit(-int(self.ts.next().text))
            return Neg(self.unary())
        return self.application()

    def application(self):
        tok = self.ts.peek
        if tok.kind == "ident" and tok.text != "mod":
            self.ts.next()
            args = []
            while self._starts_atom():
                args.append(self.atom())
            return App(tok.text, tuple(args)) if args else Var(tok.text)
        return self.atom()

    def _starts_atom(self) -> bool:
        tok = self.ts.peek
        return tok.kind == "int" or tok.is_op("(", "[") or (tok.kind == "ident" and tok.text not in ("mod", "in"))

    def atom(self):
        tok = self.ts.next()
        if tok.kind == "int":
            return IntLit(int(tok.text))
        if tok.kind == "ident":
            return Var(tok.text)
        if tok.is_op("("):
            t = self.term()
            self.ts.expect_op(")")
            return t
        if tok.is_op("["):
            # list notation: [a; b; c] is a :: b :: c :: nil
            items = []
            if not self.ts.accept_op("]"):
                items.append(self.term())
                while self.ts.accept_op(";"):
                    items.append(self.term())
                self.ts.expect_op("]")
            t = Var("nil")
            for x in reversed(items):
                t = Cons(x, t)
            return t
        self.ts.fail({"term"}, tok)


def parse_coq_term(text: str):
    p = _CoqParser(text)
    try:
        t = p.term()
        if p.ts.peek.kind != "eof":
            p.ts.fail({"end of term"})
        return t
    except AnnotSyntaxError as err:
        raise err.located(text)
