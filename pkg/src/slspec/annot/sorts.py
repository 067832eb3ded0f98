"""Sort environments and the sort checker for terms and assertions.

Sorts are plain strings: ``Z``, ``list Z``, ``tree``, ``ptr``, ``addr``.
``?`` marks a variable whose sort is not declared (``exists`` binders); it is
compatible with everything.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from types import MappingProxyType

from ..errors import ArityError, SortError, UnknownSymbol
from ..logic.values import value_sort
from .ast import (
    AddrOf,
    App,
    BinOp,
    Cons,
    DataAt,
    Disj,
    Emp,
    Exists,
    Field,
    IntLit,
    Lit,
    Neg,
    Pred,
    Pure,
    PureConj,
    SepConj,
    Store,
    Var,
)
from .render import render_term

ANY = "?"

# Shape predicates modelled by the satisfaction checker.
BUILTIN_PREDICATES = MappingProxyType(
    {
        "sll": ("ptr", "list Z"),
        "tree": ("ptr", "tree"),
        "int_array": ("ptr", "Z", "list Z"),
        "char_array": ("ptr", "Z", "list Z"),
    }
)

CONSTANTS = MappingProxyType({"nil": "list Z", "empty": "tree", "NULL": "ptr", "null": "ptr"})

CONSTRUCTORS = MappingProxyType({"make_tree": (("tree", "Z", "tree"), "tree")})

_SORT_ALIASES = {"bool": "Z", "nat": "Z", "int": "Z", "Prop": "Assertion"}


def normalize_sort(s: str) -> str:
    s = " ".join(s.replace("(", " ( ").replace(")", " ) ").split())
    while s.startswith("( ") and s.endswith(" )"):
        s = s[2:-2]
    s = s.replace("( ", "(").replace(" )", ")")
    return _SORT_ALIASES.get(s, s)


def compatible(a: str, b: str) -> bool:
    return a == ANY or b == ANY or normalize_sort(a) == normalize_sort(b)


@dataclass(frozen=True)
class SortEnv:
    vars: MappingProxyType = field(default_factory=lambda: MappingProxyType({}))
    functions: MappingProxyType = field(default_factory=lambda: MappingProxyType({}))
    predicates: MappingProxyType = field(default_factory=lambda: MappingProxyType(dict(BUILTIN_PREDICATES)))

    @classmethod
    def build(cls, vars=None, functions=None, predicates=None) -> "SortEnv":
        preds = dict(BUILTIN_PREDICATES)
        preds.update(predicates or {})
        funs = dict(CONSTRUCTORS)
        funs.update(functions or {})
        return cls(
            MappingProxyType({k: normalize_sort(v) for k, v in (vars or {}).items()}),
            MappingProxyType(funs),
            MappingProxyType(preds),
        )

    def bind(self, **more) -> "SortEnv":
        return self.bind_all(more)

    def bind_all(self, more) -> "SortEnv":
        merged = dict(self.vars)
        merged.update({k: normalize_sort(v) for k, v in more.items()})
        return replace(self, vars=MappingProxyType(merged))

    def with_externs(self, decls) -> "SortEnv":
        """Extern declarations add functions, or predicates when the result
        sort is ``Assertion``."""
        funs, preds = dict(self.functions), dict(self.predicates)
        for d in decls:
            args = tuple(normalize_sort(s) for s in d.arg_sorts)
            res = normalize_sort(d.result_sort)
            if res == "Assertion":
                preds[d.name] = args
            else:
                funs[d.name] = (args, res)
        return replace(self, functions=MappingProxyType(funs), predicates=MappingProxyType(preds))


def check_term(t, env: SortEnv) -> str:
    match t:
        case IntLit():
            return "Z"
        case Lit(value=v):
            return value_sort(v)
        case Var(name=n):
            if n in env.vars:
                return env.vars[n]
            return CONSTANTS.get(n, ANY)
        case App(fn="addr", args=args):
            if len(args) != 1 or not isinstance(args[0], Field):
                raise SortError(render_term(t), "field access", "term", "addr expects a single field access")
            check_term(args[0].base, env)
            return "addr"
        case App(fn=fn, args=args):
            if fn not in env.functions:
                raise UnknownSymbol(fn, "function")
            arg_sorts, res = env.functions[fn]
            if len(arg_sorts) != len(args):
                raise ArityError(fn, len(arg_sorts), len(args), kind="function")
            for i, (a, want) in enumerate(zip(args, arg_sorts), start=1):
                got = check_term(a, env)
                if not compatible(got, want):
                    raise SortError(
                        render_term(a, True), want, got,
                        f"sort mismatch in argument {i} of '{fn}': expected {want} but found {got}",
                    )
            return res
        case BinOp(lhs=a, rhs=b):
            _expect(a, "Z", env)
            _expect(b, "Z", env)
            return "Z"
        case Neg(arg=a):
            _expect(a, "Z", env)
            return "Z"
        case Cons(head=h, tail=tl):
            _expect(h, "Z", env)
            _expect(tl, "list Z", env)
            return "list Z"
        case AddrOf(arg=a):
            check_term(a, env)
            return "addr"
        case Field(base=b):
            check_term(b, env)
            return ANY
    raise TypeError(f"not a term: {t!r}")


def _expect(t, want: str, env: SortEnv):
    got = check_term(t, env)
    if not compatible(got, want):
        raise SortError(render_term(t, True), want, got)


def check_assertion(a, env: SortEnv) -> None:
    """Raise SortError / ArityError / UnknownSymbol on the first problem."""
    match a:
        case Emp():
            return
        case Pure(op=op, lhs=l, rhs=r):
            ls, rs = check_term(l, env), check_term(r, env)
            if op in ("<", "<=", ">", ">="):
                for t, s in ((l, ls), (r, rs)):
                    if not compatible(s, "Z"):
                        raise SortError(render_term(t, True), "Z", s)
            elif not compatible(ls, rs):
                raise SortError(render_term(r, True), ls, rs, f"sort mismatch in '{op}': {ls} versus {rs}")
        case Store(addr=x, value=v) | DataAt(addr=x, value=v):
            s = check_term(x, env)
            if not compatible(s, "addr") and not compatible(s, "ptr"):
                raise SortError(render_term(x, True), "addr", s)
            check_term(v, env)
        case Pred(name=n, args=args):
            if n not in env.predicates:
                if n in env.functions:
                    raise SortError(n, "Assertion", env.functions[n][1], f"'{n}' is a function, not a predicate")
                raise UnknownSymbol(n, "predicate")
            want = env.predicates[n]
            if len(want) != len(args):
                raise ArityError(n, len(want), len(args))
            for i, (t, w) in enumerate(zip(args, want), start=1):
                got = check_term(t, env)
                if not compatible(got, w):
                    raise SortError(
                        render_term(t, True), w, got,
                        f"sort mismatch in argument {i} of '{n}': expected {w} but found {got}",
                    )
        case SepConj(lhs=l, rhs=r) | PureConj(lhs=l, rhs=r) | Disj(lhs=l, rhs=r):
            check_assertion(l, env)
            check_assertion(r, env)
        case Exists(vars=vs, body=b):
            check_assertion(b, env.bind_all({v: ANY for v in vs}))
        case _:
            raise TypeError(f"not an assertion: {a!r}")
