"""Syntax trees for terms, assertions and annotation blocks.

All nodes are frozen dataclasses, so structural equality is ``==`` and nodes
can be shared freely between threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

# -- terms ------------------------------------------------------------------


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class App:
    fn: str
    args: tuple = ()


@dataclass(frozen=True)
class BinOp:
    op: str  # + - * / %
    lhs: "Term"
    rhs: "Term"


@dataclass(frozen=True)
class Neg:
    arg: "Term"


@dataclass(frozen=True)
class Cons:
    head: "Term"
    tail: "Term"


@dataclass(frozen=True)
class AddrOf:
    arg: "Term"


@dataclass(frozen=True)
class Field:
    base: "Term"
    name: str
    arrow: bool = True  # p->f versus p.f


@dataclass(frozen=True)
class Lit:
    """An embedded logic value (produced by instantiation, never parsed)."""

    value: object


Term = Union[Var, IntLit, App, BinOp, Neg, Cons, AddrOf, Field, Lit]

# -- assertions -------------------------------------------------------------

RELOPS = ("==", "!=", "<", "<=", ">", ">=")


@dataclass(frozen=True)
class Pure:
    op: str
    lhs: Term
    rhs: Term


@dataclass(frozen=True)
class Emp:
    pass


@dataclass(frozen=True)
class Store:
    addr: Term
    value: Term


@dataclass(frozen=True)
class DataAt:
    addr: Term
    value: Term


@dataclass(frozen=True)
class Pred:
    name: str
    args: tuple = ()


@dataclass(frozen=True)
class SepConj:
    lhs: "Assertion"
    rhs: "Assertion"


@dataclass(frozen=True)
class PureConj:
    lhs: "Assertion"
    rhs: "Assertion"


@dataclass(frozen=True)
class Disj:
    lhs: "Assertion"
    rhs: "Assertion"


@dataclass(frozen=True)
class Exists:
    vars: tuple
    body: "Assertion"


Assertion = Union[Pure, Emp, Store, DataAt, Pred, SepConj, PureConj, Disj, Exists]
SPATIAL_ATOMS = (Emp, Store, DataAt, Pred)

# -- annotation blocks ------------------------------------------------------


@dataclass(frozen=True)
class ExternDecl:
    name: str
    arg_sorts: tuple
    result_sort: str

    @property
    def sort_text(self) -> str:
        return " -> ".join(tuple(_paren_sort(s) for s in self.arg_sorts) + (self.result_sort,))


def _paren_sort(s: str) -> str:
    return f"({s})" if "->" in s else s


@dataclass(frozen=True)
class FunctionSpec:
    with_params: tuple  # ((name, sort), ...)
    require: Assertion
    ensure: Assertion


EXTERN_COQ = "ExternCoq"
FUNC_SPEC = "FuncSpec"
INV_ASSERT = "InvAssert"


@dataclass(frozen=True)
class AnnotationBlock:
    kind: str
    payload: object  # tuple[ExternDecl, ...] | FunctionSpec | Assertion
    span: tuple | None = field(default=None, compare=False)
    text: str | None = field(default=None, compare=False)

    @property
    def decls(self) -> tuple:
        return self.payload if self.kind == EXTERN_COQ else ()


@dataclass(frozen=True)
class FunctionSignature:
    return_type: str
    name: str
    params: tuple  # ((c_type, identifier), ...)

    @property
    def param_names(self) -> tuple:
        return tuple(p for _, p in self.params)

    def render(self) -> str:
        ps = ", ".join(_decl(t, n) for t, n in self.params)
        return f"{_decl(self.return_type, self.name)}({ps})"


def _decl(ctype: str, name: str) -> str:
    base = ctype.rstrip("*").rstrip()
    stars = len(ctype) - len(ctype.rstrip("*"))
    return f"{base} {'*' * stars}{name}"


# -- traversal helpers ------------------------------------------------------


def term_children(t) -> tuple:
    match t:
        case App(args=args):
            return tuple(args)
        case BinOp(lhs=a, rhs=b) | Cons(head=a, tail=b):
            return (a, b)
        case Neg(arg=a) | AddrOf(arg=a):
            return (a,)
        case Field(base=b):
            return (b,)
    return ()


def term_vars(t) -> set:
    if isinstance(t, Var):
        return {t.name}
    out = set()
    for c in term_children(t):
        out |= term_vars(c)
    return out


def term_functions(t) -> set:
    out = {t.fn} if isinstance(t, App) else set()
    for c in term_children(t):
        out |= term_functions(c)
    return out


def assertion_terms(a) -> list:
    match a:
        case Pure(lhs=l, rhs=r) | Store(addr=l, value=r) | DataAt(addr=l, value=r):
            return [l, r]
        case Pred(args=args):
            return list(args)
        case SepConj(lhs=l, rhs=r) | PureConj(lhs=l, rhs=r) | Disj(lhs=l, rhs=r):
            return assertion_terms(l) + assertion_terms(r)
        case Exists(body=b):
            return assertion_terms(b)
    return []


def free_vars(a) -> set:
    match a:
        case Exists(vars=vs, body=b):
            return free_vars(b) - set(vs)
        case SepConj(lhs=l, rhs=r) | PureConj(lhs=l, rhs=r) | Disj(lhs=l, rhs=r):
            return free_vars(l) | free_vars(r)
    out = set()
    for t in assertion_terms(a):
        out |= term_vars(t)
    return out


def is_pure(a) -> bool:
    """True when ``a`` contains no spatial atom."""
    match a:
        case Pure():
            return True
        case SepConj(lhs=l, rhs=r) | PureConj(lhs=l, rhs=r) | Disj(lhs=l, rhs=r):
            return is_pure(l) and is_pure(r)
        case Exists(body=b):
            return is_pure(b)
    return False


def flatten(a, cls) -> list:
    if isinstance(a, cls):
        return flatten(a.lhs, cls) + flatten(a.rhs, cls)
    return [a]


def conjuncts(a) -> list:
    """Top-level conjuncts, looking through both ``&&`` and ``*``."""
    if isinstance(a, (PureConj, SepConj)):
        return conjuncts(a.lhs) + conjuncts(a.rhs)
    return [a]


def substitute_term(t, env: dict):
    """Replace variables by terms (``env`` maps names to terms)."""
    match t:
        case Var(name=n):
            return env.get(n, t)
        case App(fn=f, args=args):
            return App(f, tuple(substitute_term(x, env) for x in args))
        case BinOp(op=op, lhs=a, rhs=b):
            return BinOp(op, substitute_term(a, env), substitute_term(b, env))
        case Cons(head=a, tail=b):
            return Cons(substitute_term(a, env), substitute_term(b, env))
        case Neg(arg=a):
            return Neg(substitute_term(a, env))
        case AddrOf(arg=a):
            return AddrOf(substitute_term(a, env))
        case Field(base=b, name=n, arrow=arrow):
            return Field(substitute_term(b, env), n, arrow)
    return t


def substitute(a, env: dict):
    match a:
        case Pure(op=op, lhs=l, rhs=r):
            return Pure(op, substitute_term(l, env), substitute_term(r, env))
        case Store(addr=x, value=v):
            return Store(substitute_term(x, env), substitute_term(v, env))
        case DataAt(addr=x, value=v):
            return DataAt(substitute_term(x, env), substitute_term(v, env))
        case Pred(name=n, args=args):
            return Pred(n, tuple(substitute_term(x, env) for x in args))
        case SepConj(lhs=l, rhs=r):
            return SepConj(substitute(l, env), substitute(r, env))
        case PureConj(lhs=l, rhs=r):
            return PureConj(substitute(l, env), substitute(r, env))
        case Disj(lhs=l, rhs=r):
            return Disj(substitute(l, env), substitute(r, env))
        case Exists(vars=vs, body=b):
            inner = {k: v for k, v in env.items() if k not in vs}
            return Exists(vs, substitute(b, inner))
    return a
