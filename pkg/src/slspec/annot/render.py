"""Canonical printers.

Two term syntaxes share one AST: the annotation dialect writes calls as
``f(a, b)``; the Coq dialect (goal files, canonical examples) uses
juxtaposition ``f a b``.  Both printers emit the minimum parentheses that make
the matching parser return an equal tree, with one deliberate exception:
multiplication inside an assertion is always parenthesized because a bare
top-level ``*`` is separating conjunction.
"""

from __future__ import annotations

from ..logic.values import coq_literal
from .ast import (
    EXTERN_COQ,
    FUNC_SPEC,
    INV_ASSERT,
    AddrOf,
    AnnotationBlock,
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
    Lit,
    Neg,
    Pred,
    Pure,
    PureConj,
    SepConj,
    Store,
    Var,
)

INDENT = "    "

# Term precedence: higher binds tighter.
_P_CONS, _P_ADD, _P_MUL, _P_UNARY, _P_POSTFIX, _P_ATOM = 1, 2, 3, 4, 5, 6
_BIN_PREC = {"+": _P_ADD, "-": _P_ADD, "*": _P_MUL, "/": _P_MUL, "%": _P_MUL}


def _lit_text(v, atom: bool) -> str:
    text = coq_literal(v)
    if atom and " " in text and not text.startswith("("):
        return f"({text})"
    return text


def term_prec(t) -> int:
    match t:
        case Cons():
            return _P_CONS
        case BinOp(op=op):
            return _BIN_PREC[op]
        case Neg() | AddrOf():
            return _P_UNARY
        case Field():
            return _P_POSTFIX
        case IntLit(value=v):
            return _P_ATOM if v >= 0 else _P_UNARY
        case Lit():
            return _P_ATOM
    return _P_ATOM


def render_term(t, nested: bool = False) -> str:
    """Annotation-dialect rendering.  ``nested`` is true inside parentheses or
    call arguments, where ``*`` means multiplication."""
    match t:
        case Var(name=n):
            return n
        case IntLit(value=v):
            return str(v) if v >= 0 else f"(-{-v})"
        case Lit(value=v):
            return _lit_text(v, atom=True)
        case App(fn=f, args=args):
            return f"{f}({', '.join(render_term(a, True) for a in args)})"
        case Cons(head=h, tail=tl):
            return f"{_sub(h, _P_CONS + 1, nested)} :: {_sub(tl, _P_CONS, nested)}"
        case BinOp(op=op, lhs=a, rhs=b):
            p = _BIN_PREC[op]
            text = f"{_sub(a, p, nested or op == '*')} {op} {_sub(b, p + 1, nested or op == '*')}"
            if op == "*" and not nested:
                return f"({text})"
            return text
        case Neg(arg=IntLit() as a):
            return f"-({render_term(a, True)})"
        case Neg(arg=a):
            return f"-{_sub(a, _P_UNARY, nested)}"
        case AddrOf(arg=a):
            return f"&{_sub(a, _P_UNARY, nested)}"
        case Field(base=b, name=n, arrow=arrow):
            return f"{_sub(b, _P_POSTFIX, nested)}{'->' if arrow else '.'}{n}"
    raise TypeError(f"not a term: {t!r}")


def _sub(t, min_prec: int, nested: bool) -> str:
    if term_prec(t) < min_prec:
        return f"({render_term(t, True)})"
    return render_term(t, nested)


# -- Coq dialect ------------------------------------------------------------

_COQ_OP = {"+": "+", "-": "-", "*": "*", "/": "/", "%": "mod"}
_C_APP = 5  # application binds tighter than any infix operator


def _coq_prec(t) -> int:
    match t:
        case Cons():
            return _P_CONS
        case BinOp(op=op):
            return _BIN_PREC[op]
        case App(args=args) if args:
            return _C_APP
        case Neg():
            return _P_UNARY
        case IntLit(value=v) if v < 0:
            return _P_ATOM  # rendered pre-parenthesized
        case Lit(value=v):
            text = coq_literal(v)
            return _P_ATOM if (" " not in text or text.startswith("(")) else _P_CONS
    return _P_ATOM


def render_coq_term(t) -> str:
    match t:
        case Var(name=n):
            return n
        case IntLit(value=v):
            return str(v) if v >= 0 else f"(-{-v})"
        case Lit(value=v):
            return coq_literal(v)
        case App(fn=f, args=args):
            if not args:
                return f
            return " ".join([f] + [_coq_sub(a, _P_ATOM) for a in args])
        case Cons(head=h, tail=tl):
            return f"{_coq_sub(h, _P_CONS + 1)} :: {_coq_sub(tl, _P_CONS)}"
        case BinOp(op=op, lhs=a, rhs=b):
            p = _BIN_PREC[op]
            return f"{_coq_sub(a, p)} {_COQ_OP[op]} {_coq_sub(b, p + 1)}"
        case Neg(arg=a):
            return f"- {_coq_sub(a, _P_UNARY)}"
    raise TypeError(f"term has no Coq rendering: {t!r}")


def _coq_sub(t, min_prec: int) -> str:
    if _coq_prec(t) < min_prec:
        return f"({render_coq_term(t)})"
    return render_coq_term(t)


# -- assertions -------------------------------------------------------------

_A_EXISTS, _A_DISJ, _A_CONJ, _A_SEP, _A_ATOM = 0, 1, 2, 3, 4


def _aprec(a) -> int:
    match a:
        case Exists():
            return _A_EXISTS
        case Disj():
            return _A_DISJ
        case PureConj():
            return _A_CONJ
        case SepConj():
            return _A_SEP
    return _A_ATOM


def render_assertion(a) -> str:
    match a:
        case Emp():
            return "emp"
        case Pure(op=op, lhs=l, rhs=r):
            return f"{render_term(l)} {op} {render_term(r)}"
        case Store(addr=x, value=v):
            return f"store({render_term(x, True)}, {render_term(v, True)})"
        case DataAt(addr=x, value=v):
            return f"data_at({render_term(x, True)}, {render_term(v, True)})"
        case Pred(name=n, args=args):
            return f"{n}({', '.join(render_term(x, True) for x in args)})"
        case Exists(vars=vs, body=b):
            return f"exists {' '.join(vs)}, {render_assertion(b)}"
        case SepConj(lhs=l, rhs=r):
            return f"{_asub(l, _A_SEP)} * {_asub(r, _A_SEP + 1)}"
        case PureConj(lhs=l, rhs=r):
            return f"{_asub(l, _A_CONJ)} && {_asub(r, _A_CONJ + 1)}"
        case Disj(lhs=l, rhs=r):
            return f"{_asub(l, _A_DISJ)} || {_asub(r, _A_DISJ + 1)}"
    raise TypeError(f"not an assertion: {a!r}")


def _asub(a, min_prec: int) -> str:
    if _aprec(a) < min_prec:
        return f"({render_assertion(a)})"
    return render_assertion(a)


# -- blocks -----------------------------------------------------------------


def render_extern(decl: ExternDecl) -> str:
    return f"({decl.name}: {decl.sort_text})"


def render_funcspec(spec: FunctionSpec, indent: str = "") -> str:
    lines = []
    if spec.with_params:
        binders = " ".join(f"({n}: {s})" for n, s in spec.with_params)
        lines.append(f"With {binders}")
    lines.append(f"Require {render_assertion(spec.require)}")
    lines.append(f"Ensure {render_assertion(spec.ensure)}")
    pad = indent + INDENT
    return "/*@ " + ("\n" + pad).join(lines) + " */"


def render_annotation(block: AnnotationBlock, indent: str = "") -> str:
    """Canonical text of one ``/*@ ... */`` comment.

    Continuation lines are indented four spaces past ``indent`` (the column
    the comment starts at).
    """
    if block.kind == EXTERN_COQ:
        return "/*@ Extern Coq " + " ".join(render_extern(d) for d in block.payload) + " */"
    if block.kind == FUNC_SPEC:
        return render_funcspec(block.payload, indent)
    if block.kind == INV_ASSERT:
        return f"/*@ Inv Assert\n{indent}{INDENT}{render_assertion(block.payload)} */"
    raise ValueError(f"unknown block kind {block.kind!r}")
