"""Functional definitions and the call-by-value term evaluator.

Definitions use the annotation term syntax extended with ``match`` and
``if``; the full grammar is in docs/grammar.md.  A tiny example::

    def rev(l: list Z): list Z :=
      match l with
      | nil => nil
      | x :: xs => app(rev(xs), x :: nil)
      end.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from types import MappingProxyType

from ..annot.ast import (
    RELOPS,
    AddrOf,
    App,
    BinOp,
    Cons,
    Disj,
    Field,
    IntLit,
    Lit,
    Neg,
    Pure,
    PureConj,
    Var,
)
from ..annot.parser import KEYWORDS, _Parser
from ..annot.sorts import ANY, CONSTANTS, CONSTRUCTORS, compatible, normalize_sort
from ..errors import (
    AnnotSyntaxError,
    DuplicateDef,
    EvalError,
    FuelExhausted,
    SortError,
    UnboundVar,
    UnknownSymbol,
)
from .values import EMPTY, NIL, NULL, CharList, Empty, Int, ListV, Node, list_items, values_equal

DEFAULT_FUEL = 10_000

# -- expression forms beyond plain terms -------------------------------------


@dataclass(frozen=True)
class PNil:
    pass


@dataclass(frozen=True)
class PCons:
    head: str
    tail: str


@dataclass(frozen=True)
class PEmpty:
    pass


@dataclass(frozen=True)
class PNode:
    left: str
    val: str
    right: str


@dataclass(frozen=True)
class PVar:
    name: str  # "_" is the wildcard


@dataclass(frozen=True)
class PInt:
    value: int


@dataclass(frozen=True)
class Match:
    scrutinee: object
    arms: tuple  # ((pattern, expr), ...)


@dataclass(frozen=True)
class If:
    cond: object  # Pure / PureConj / Disj over terms
    then: object
    orelse: object


@dataclass(frozen=True)
class FunDef:
    name: str
    params: tuple  # ((name, sort), ...)
    result_sort: str
    body: object

    @property
    def signature(self) -> tuple:
        return tuple(s for _, s in self.params), self.result_sort


class FunTable:
    """Immutable name -> FunDef mapping."""

    def __init__(self, defs=()):
        self._defs = MappingProxyType({d.name: d for d in defs})

    def __contains__(self, name):
        return name in self._defs

    def __getitem__(self, name) -> FunDef:
        return self._defs[name]

    def __iter__(self):
        return iter(self._defs.values())

    def __len__(self):
        return len(self._defs)

    def get(self, name, default=None):
        return self._defs.get(name, default)

    @property
    def names(self) -> frozenset:
        return frozenset(self._defs)

    def signatures(self, names=None) -> dict:
        """``name -> (arg sorts, result sort)`` for a SortEnv."""
        return {d.name: d.signature for d in self._defs.values() if names is None or d.name in names}

    def extend(self, d: FunDef) -> "FunTable":
        return register_function_def(self, d)

    def merge(self, other: "FunTable") -> "FunTable":
        t = self
        for d in other:
            t = register_function_def(t, d)
        return t


# -- parsing ----------------------------------------------------------------


class _DefParser(_Parser):
    """Term parser with ``match``/``if`` and without field access."""

    def __init__(self, text):
        super().__init__(text)
        self.depth = 1  # '*' is always multiplication in definitions

    def postfix(self):
        return self.primary()

    def primary(self):
        if self.ts.peek.is_word("match"):
            return self.match()
        if self.ts.peek.is_word("if"):
            return self.if_expr()
        return super().primary()

    def expr(self):
        return self.term()

    def match(self):
        self.ts.expect_word("match")
        scrut = self.expr()
        self.ts.expect_word("with")
        arms = []
        while self.ts.accept_op("|"):
            pat = self.pattern()
            self.ts.expect_op("=>")
            arms.append((pat, self.expr()))
        if not arms:
            self.ts.fail({"'|'"})
        self.ts.expect_word("end")
        return Match(scrut, tuple(arms))

    def if_expr(self):
        self.ts.expect_word("if")
        cond = self.cond()
        self.ts.expect_word("then")
        then = self.expr()
        self.ts.expect_word("else")
        return If(cond, then, self.expr())

    def cond(self):
        c = self.cond_and()
        while self.ts.accept_op("||"):
            c = Disj(c, self.cond_and())
        return c

    def cond_and(self):
        c = self.cond_atom()
        while self.ts.accept_op("&&"):
            c = PureConj(c, self.cond_atom())
        return c

    def cond_atom(self):
        save = self.ts.i
        try:
            lhs = self.term()
            tok = self.ts.peek
            if not tok.is_op(*RELOPS):
                self.ts.fail({repr(op) for op in RELOPS})
            self.ts.next()
            return Pure(tok.text, lhs, self.term())
        except AnnotSyntaxError as err:
            if not self.ts.tokens[save].is_op("("):
                raise
            self.ts.i = save + 1
            try:
                c = self.cond()
                self.ts.expect_op(")")
                return c
            except AnnotSyntaxError as err2:
                raise err if err.position >= err2.position else err2

    def pattern(self):
        tok = self.ts.peek
        if tok.kind == "int":
            self.ts.next()
            return PInt(int(tok.text))
        if tok.is_op("-") and self.ts.ahead().kind == "int":
            self.ts.next()
            return PInt(-int(self.ts.next().text))
        name = self.ts.expect_ident().text
        if name == "nil":
            return PNil()
        if name == "empty":
            return PEmpty()
        if name == "make_tree":
            self.ts.expect_op("(")
            l = self._binder()
            self.ts.expect_op(",")
            v = self._binder()
            self.ts.expect_op(",")
            r = self._binder()
            self.ts.expect_op(")")
            return PNode(l, v, r)
        if self.ts.accept_op("::"):
            return PCons(name, self._binder())
        return PVar(name)

    def _binder(self) -> str:
        return self.ts.expect_ident().text

    def definition(self) -> FunDef:
        self.ts.expect_word("def")
        name = self.ts.expect_ident().text
        self.ts.expect_op("(")
        params = []
        if not self.ts.peek.is_op(")"):
            while True:
                names = [self.ts.expect_ident().text]
                while self.ts.peek.kind == "ident":
                    names.append(self.ts.next().text)
                self.ts.expect_op(":")
                s = normalize_sort(self.sort())
                params.extend((n, s) for n in names)
                if not self.ts.accept_op(","):
                    break
        self.ts.expect_op(")")
        self.ts.expect_op(":")
        result = normalize_sort(self.sort())
        self.ts.expect_op(":=")
        body = self.expr()
        self.ts.expect_op(".")
        return FunDef(name, tuple(params), result, body)


_COMMENT_RE = re.compile(r"\(\*.*?\*\)", re.S)


def _strip_comments(text: str) -> str:
    return _COMMENT_RE.sub(lambda m: re.sub(r"[^\n]", " ", m.group()), text)


def parse_defs(text: str) -> list[FunDef]:
    """Parse a sequence of ``def ... .`` items; ``(* *)`` comments allowed."""
    p = _DefParser(_strip_comments(text))
    out = []
    try:
        while p.ts.peek.kind != "eof":
            out.append(p.definition())
    except AnnotSyntaxError as err:
        raise err.located(text)
    return out


def parse_expr(text: str):
    p = _DefParser(text)
    try:
        e = p.expr()
        p.end()
        return e
    except AnnotSyntaxError as err:
        raise err.located(text)


# -- sort checking of definitions --------------------------------------------

_RESERVED = KEYWORDS | {"match", "with", "end", "if", "then", "else", "def"}


def _sort_of(e, env: dict, table: dict) -> str:
    match e:
        case IntLit():
            return "Z"
        case Lit():
            from .values import value_sort

            return value_sort(e.value)
        case Var(name=n):
            if n in env:
                return env[n]
            if n in CONSTANTS:
                return CONSTANTS[n]
            raise UnboundVar(n)
        case App(fn=fn, args=args):
            if fn in CONSTRUCTORS:
                want, res = CONSTRUCTORS[fn]
            elif fn in table:
                want, res = table[fn]
            else:
                raise UnknownSymbol(fn, "function")
            if len(want) != len(args):
                raise SortError(fn, f"{len(want)} arguments", f"{len(args)}", f"function '{fn}' expects {len(want)} arguments but got {len(args)}")
            for i, (a, w) in enumerate(zip(args, want), start=1):
                got = _sort_of(a, env, table)
                if not compatible(got, w):
                    raise SortError(fn, w, got, f"sort mismatch in argument {i} of '{fn}': expected {w} but found {got}")
            return res
        case BinOp(lhs=a, rhs=b):
            for x in (a, b):
                s = _sort_of(x, env, table)
                if not compatible(s, "Z"):
                    raise SortError(x, "Z", s)
            return "Z"
        case Neg(arg=a):
            s = _sort_of(a, env, table)
            if not compatible(s, "Z"):
                raise SortError(a, "Z", s)
            return "Z"
        case Cons(head=h, tail=t):
            hs, ts = _sort_of(h, env, table), _sort_of(t, env, table)
            if not compatible(hs, "Z"):
                raise SortError(h, "Z", hs)
            if not compatible(ts, "list Z"):
                raise SortError(t, "list Z", ts)
            return "list Z"
        case If(cond=c, then=a, orelse=b):
            _check_cond(c, env, table)
            return _join(_sort_of(a, env, table), _sort_of(b, env, table), e)
        case Match(scrutinee=s, arms=arms):
            ss = _sort_of(s, env, table)
            result = ANY
            for pat, body in arms:
                inner = dict(env)
                inner.update(_pattern_binds(pat, ss))
                result = _join(result, _sort_of(body, inner, table), e)
            return result
        case AddrOf() | Field():
            raise SortError(e, "value", "address", "address terms are not allowed in definitions")
    raise TypeError(f"not an expression: {e!r}")


def _join(a, b, where):
    if not compatible(a, b):
        raise SortError(where, a, b, f"branches disagree: {a} versus {b}")
    return b if a == ANY else a


def _check_cond(c, env, table):
    match c:
        case Pure(lhs=l, rhs=r):
            _join(_sort_of(l, env, table), _sort_of(r, env, table), c)
        case PureConj(lhs=l, rhs=r) | Disj(lhs=l, rhs=r):
            _check_cond(l, env, table)
            _check_cond(r, env, table)


def _pattern_binds(pat, scrut_sort) -> dict:
    bad = lambda want: SortError(pat, want, scrut_sort, f"pattern expects {want} but scrutinee has sort {scrut_sort}")
    match pat:
        case PNil():
            if not compatible(scrut_sort, "list Z"):
                raise bad("list Z")
            return {}
        case PCons(head=h, tail=t):
            if not compatible(scrut_sort, "list Z"):
                raise bad("list Z")
            return {h: "Z", t: "list Z"}
        case PEmpty():
            if not compatible(scrut_sort, "tree"):
                raise bad("tree")
            return {}
        case PNode(left=l, val=v, right=r):
            if not compatible(scrut_sort, "tree"):
                raise bad("tree")
            return {l: "tree", v: "Z", r: "tree"}
        case PInt():
            if not compatible(scrut_sort, "Z"):
                raise bad("Z")
            return {}
        case PVar(name=n):
            return {} if n == "_" else {n: scrut_sort}
    raise TypeError(pat)


def check_fundef(table: FunTable, d: FunDef) -> None:
    """Sort-check ``d`` against ``table``; ``d`` may call itself."""
    sigs = table.signatures()
    sigs[d.name] = d.signature
    env = {}
    for n, s in d.params:
        if n in _RESERVED:
            raise SortError(n, "identifier", "keyword", f"parameter name {n!r} is reserved")
        env[n] = s
    got = _sort_of(d.body, env, sigs)
    if not compatible(got, d.result_sort):
        raise SortError(d.name, d.result_sort, got, f"body of '{d.name}' has sort {got}, declared {d.result_sort}")


def register_function_def(table: FunTable, d: FunDef) -> FunTable:
    if d.name in table or d.name in CONSTRUCTORS:
        raise DuplicateDef(d.name)
    check_fundef(table, d)
    return FunTable(list(table) + [d])


def table_from_text(text: str, base: FunTable | None = None) -> FunTable:
    t = base or FunTable()
    for d in parse_defs(text):
        t = register_function_def(t, d)
    return t


# -- shipped libraries -------------------------------------------------------


def _read_data(name: str) -> str:
    return resources.files("slspec").joinpath("data", name).read_text(encoding="utf-8")


@lru_cache(maxsize=None)
def prelude() -> FunTable:
    """Definitions usable in annotations without an ``Extern Coq`` import."""
    return table_from_text(_read_data("prelude.defs"))


@lru_cache(maxsize=None)
def library() -> FunTable:
    """Prelude plus the importable library (these need ``Extern Coq``)."""
    return table_from_text(_read_data("library.defs"), prelude())


def import_required(name: str) -> bool:
    return name in library() and name not in prelude()


def definition_source(name: str, *texts: str) -> str | None:
    """Source text of ``def name(...) ... .`` from the given defs texts, or
    from the shipped files when none are given."""
    texts = texts or (_read_data("library.defs"), _read_data("prelude.defs"))
    pat = re.compile(r"^def\s+" + re.escape(name) + r"\s*\(.*?\.\s*$", re.S | re.M)
    for text in texts:
        m = pat.search(_strip_comments(text))
        if m:
            return m.group(0).strip()
    return None


# -- evaluation --------------------------------------------------------------


class Fuel:
    __slots__ = ("remaining",)

    def __init__(self, amount: int):
        if amount < 1:
            raise ValueError("fuel must be positive")
        self.remaining = amount

    def tick(self):
        self.remaining -= 1
        if self.remaining < 0:
            raise FuelExhausted("recursion fuel exhausted")


_NATIVE_CONSTANTS = {"nil": NIL, "empty": EMPTY, "NULL": NULL, "null": NULL}


def eval_term(t, env: dict, defs: FunTable | None = None, fuel: int = DEFAULT_FUEL):
    """Evaluate a term or definition expression to a LogicValue."""
    defs = library() if defs is None else defs
    try:
        return _eval(t, env, defs, Fuel(fuel))
    except RecursionError:
        raise FuelExhausted("recursion too deep") from None


def _as_int(v, where):
    if not isinstance(v, Int):
        raise SortError(where, "Z", type(v).__name__, f"expected an integer but got {v!r}")
    return v.value


def _arith(op, a, b):
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    # Coq's Z.div / Z.modulo: floor semantics and x/0 = 0, x mod 0 = x
    if op == "/":
        return 0 if b == 0 else a // b
    if op == "%":
        return a if b == 0 else a % b
    raise EvalError(f"unknown operator {op!r}")


def _eval(t, env, defs, fuel):
    match t:
        case IntLit(value=v):
            return Int(v)
        case Lit(value=v):
            return v
        case Var(name=n):
            if n in env:
                return env[n]
            if n in _NATIVE_CONSTANTS:
                return _NATIVE_CONSTANTS[n]
            raise UnboundVar(n)
        case BinOp(op=op, lhs=a, rhs=b):
            x = _as_int(_eval(a, env, defs, fuel), a)
            y = _as_int(_eval(b, env, defs, fuel), b)
            return Int(_arith(op, x, y))
        case Neg(arg=a):
            return Int(-_as_int(_eval(a, env, defs, fuel), a))
        case Cons(head=h, tail=tl):
            hv = _eval(h, env, defs, fuel)
            items = list_items(_eval(tl, env, defs, fuel))
            if items is None:
                raise SortError(tl, "list Z", "non-list", "'::' expects a list on the right")
            return ListV((hv,) + items)
        case App(fn="make_tree", args=args):
            if len(args) != 3:
                raise SortError("make_tree", "3 arguments", str(len(args)))
            l, v, r = (_eval(a, env, defs, fuel) for a in args)
            for side in (l, r):
                if not isinstance(side, (Empty, Node)):
                    raise SortError("make_tree", "tree", type(side).__name__)
            return Node(l, v, r)
        case App(fn=fn, args=args):
            d = defs.get(fn)
            if d is None:
                raise UnknownSymbol(fn, "function")
            if len(args) != len(d.params):
                raise SortError(fn, f"{len(d.params)} arguments", str(len(args)))
            vals = [_eval(a, env, defs, fuel) for a in args]
            fuel.tick()
            return _eval(d.body, {n: v for (n, _), v in zip(d.params, vals)}, defs, fuel)
        case If(cond=c, then=a, orelse=b):
            return _eval(a if eval_cond(c, env, defs, fuel) else b, env, defs, fuel)
        case Match(scrutinee=s, arms=arms):
            v = _eval(s, env, defs, fuel)
            for pat, body in arms:
                binds = match_pattern(pat, v)
                if binds is not None:
                    return _eval(body, {**env, **binds}, defs, fuel)
            raise EvalError(f"no match arm covers {v!r}")
        case AddrOf() | Field():
            raise EvalError("address terms have no functional value")
    raise TypeError(f"not a term: {t!r}")


def eval_cond(c, env, defs, fuel) -> bool:
    match c:
        case Pure(op=op, lhs=l, rhs=r):
            return compare(op, _eval(l, env, defs, fuel), _eval(r, env, defs, fuel))
        case PureConj(lhs=l, rhs=r):
            return eval_cond(l, env, defs, fuel) and eval_cond(r, env, defs, fuel)
        case Disj(lhs=l, rhs=r):
            return eval_cond(l, env, defs, fuel) or eval_cond(r, env, defs, fuel)
    raise TypeError(f"not a condition: {c!r}")


def compare(op: str, a, b) -> bool:
    if op == "==":
        return values_equal(a, b)
    if op == "!=":
        return not values_equal(a, b)
    x, y = _as_int(a, op), _as_int(b, op)
    return {"<": x < y, "<=": x <= y, ">": x > y, ">=": x >= y}[op]


def match_pattern(pat, v) -> dict | None:
    match pat:
        case PVar(name=n):
            return {} if n == "_" else {n: v}
        case PInt(value=k):
            return {} if isinstance(v, Int) and v.value == k else None
        case PNil():
            items = list_items(v)
            return {} if items == () else None
        case PCons(head=h, tail=tl):
            items = list_items(v)
            if not items:
                return None
            rest = CharList(v.codes[1:]) if isinstance(v, CharList) else ListV(items[1:])
            return _binds((h, items[0]), (tl, rest))
        case PEmpty():
            return {} if isinstance(v, Empty) else None
        case PNode(left=l, val=x, right=r):
            if not isinstance(v, Node):
                return None
            return _binds((l, v.left), (x, v.val), (r, v.right))
    raise TypeError(pat)


def _binds(*pairs) -> dict:
    return {n: v for n, v in pairs if n != "_"}

