"""Model checking of assertions against concrete heaps.

The checker computes *frames*: for an assertion ``a`` and an available heap
``h`` it enumerates the footprints ``f`` (subsets of ``dom h``) such that the
restriction of ``h`` to ``f`` satisfies ``a``.  Then ``h |= a`` iff ``dom h``
itself is one of the frames.  Separating conjunction pairs a frame of the left
side with a frame of the right side found in what is left over, which makes
disjointness hold by construction.

``&&`` follows the annotation convention: its pure conjuncts are facts about
the variables and do not constrain the heap, while its spatial conjuncts must
all describe the same footprint.  A pure atom standing on its own (or as an
operand of ``*``) describes the empty heap.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from ..annot.ast import (
    AddrOf,
    App,
    DataAt,
    Disj,
    Emp,
    Exists,
    Field,
    Pred,
    Pure,
    PureConj,
    SepConj,
    Store,
    Var,
    flatten,
    is_pure,
)
from ..annot.sorts import SortEnv, check_assertion
from ..errors import EvalError, FuelExhausted, SortError, UnboundVar
from . import funs
from .heap import FieldAddr, HeapState, StackCell
from .values import EMPTY, NIL, NULL, CharList, Empty, Int, ListV, Node, Ptr, list_items, value_sort, values_equal

LIST_FIELDS = ("data", "next")
TREE_FIELDS = ("val", "left", "right")


class SatResult(enum.Enum):
    SAT = "Sat"
    UNSAT = "Unsat"
    UNKNOWN = "Unknown"

    def __str__(self):
        return self.value


Sat, Unsat, Unknown = SatResult.SAT, SatResult.UNSAT, SatResult.UNKNOWN


@dataclass(frozen=True)
class SearchConfig:
    """Bounds for existential witness search and term evaluation."""

    max_assignments: int = 20_000
    int_radius: int = 1
    fuel: int = funs.DEFAULT_FUEL
    defs: object = None  # FunTable; None means the shipped library
    check_sorts: bool = True

    @property
    def table(self):
        return funs.library() if self.defs is None else self.defs


@dataclass
class _Ctx:
    cfg: SearchConfig
    incomplete: bool = False
    assignments: int = 0
    reasons: list = field(default_factory=list)
    unbounded: list = field(default_factory=list)  # variables searched by domain

    def give_up(self, why: str):
        self.incomplete = True
        if why not in self.reasons:
            self.reasons.append(why)


# -- term / address evaluation ------------------------------------------------


def _value(t, env, ctx):
    return funs.eval_term(t, env, ctx.cfg.table, ctx.cfg.fuel)


def eval_addr(t, env, ctx=None):
    """Address denoted by ``addr(p.f)``, ``&p->f``, ``&x`` or a pointer value.

    Returns None for a null base (no cell can live there).
    """
    ctx = ctx or _Ctx(SearchConfig())
    match t:
        case App(fn="addr", args=(Field(base=b, name=f),)) | AddrOf(arg=Field(base=b, name=f)):
            base = _value(b, env, ctx)
            if not isinstance(base, Ptr):
                raise SortError(t, "ptr", value_sort(base), "field access on a non-pointer")
            return None if base.is_null else FieldAddr(base.node, f)
        case AddrOf(arg=Var(name=n)):
            return StackCell(n)
    v = _value(t, env, ctx)
    if isinstance(v, Ptr):
        return None if v.is_null else FieldAddr(v.node, "*")
    raise SortError(t, "addr", value_sort(v), "store/data_at expects an address")


# -- shape predicates ---------------------------------------------------------


def sll_frame(heap, p, l):
    """Footprint of ``sll(p, l)`` inside ``heap`` or None."""
    items = list_items(l)
    if items is None or not isinstance(p, Ptr):
        return None
    foot, seen = set(), set()
    for x in items:
        if p.is_null or p.node in seen:
            return None
        seen.add(p.node)
        da, na = FieldAddr(p.node, "data"), FieldAddr(p.node, "next")
        if da not in heap or na not in heap or not values_equal(heap[da], x):
            return None
        foot |= {da, na}
        p = heap[na]
        if not isinstance(p, Ptr):
            return None
    return frozenset(foot) if p.is_null else None


def decode_sll(heap, p):
    """The list a heap-walk from ``p`` spells out, or None (cycle / gap)."""
    out, seen = [], set()
    while isinstance(p, Ptr) and not p.is_null:
        if p.node in seen:
            return None
        seen.add(p.node)
        da, na = FieldAddr(p.node, "data"), FieldAddr(p.node, "next")
        if da not in heap or na not in heap:
            return None
        out.append(heap[da])
        p = heap[na]
    return ListV(tuple(out)) if isinstance(p, Ptr) else None


def tree_frame(heap, p, t):
    foot = set()

    def go(p, t):
        if not isinstance(p, Ptr):
            return False
        if isinstance(t, Empty):
            return p.is_null
        if not isinstance(t, Node) or p.is_null:
            return False
        cells = [FieldAddr(p.node, f) for f in TREE_FIELDS]
        if any(c not in heap or c in foot for c in cells):
            return False
        va, la, ra = cells
        if not values_equal(heap[va], t.val):
            return False
        foot.update(cells)
        return go(heap[la], t.left) and go(heap[ra], t.right)

    return frozenset(foot) if go(p, t) else None


def decode_tree(heap, p, _seen=None):
    seen = set() if _seen is None else _seen
    if not isinstance(p, Ptr):
        return None
    if p.is_null:
        return EMPTY
    if p.node in seen:
        return None
    seen.add(p.node)
    va, la, ra = (FieldAddr(p.node, f) for f in TREE_FIELDS)
    if va not in heap or la not in heap or ra not in heap:
        return None
    left = decode_tree(heap, heap[la], seen)
    right = decode_tree(heap, heap[ra], seen)
    if left is None or right is None:
        return None
    return Node(left, heap[va], right)


def array_frame(heap, p, n, l):
    items = list_items(l)
    if items is None or not isinstance(n, Int) or len(items) != n.value:
        return None
    if not items:
        return frozenset()
    if not isinstance(p, Ptr) or p.is_null:
        return None
    cells = [FieldAddr(p.node, f"[{i}]") for i in range(len(items))]
    if any(c not in heap or not values_equal(heap[c], x) for c, x in zip(cells, items)):
        return None
    return frozenset(cells)


def decode_array(heap, p, n):
    if not isinstance(n, Int) or n.value < 0:
        return None
    if n.value == 0:
        return NIL
    if not isinstance(p, Ptr) or p.is_null:
        return None
    cells = [FieldAddr(p.node, f"[{i}]") for i in range(n.value)]
    if any(c not in heap for c in cells):
        return None
    return ListV(tuple(heap[c] for c in cells))


def _pred_frames(a: Pred, heap, env, ctx):
    args = [_value(t, env, ctx) for t in a.args]
    if a.name == "sll":
        f = sll_frame(heap, *args)
    elif a.name == "tree":
        f = tree_frame(heap, *args)
    elif a.name in ("int_array", "char_array"):
        f = array_frame(heap, *args)
    else:
        ctx.give_up(f"no executable semantics for predicate '{a.name}'")
        return []
    return [] if f is None else [f]


# -- frames ---------------------------------------------------------------------


def _holds(a: Pure, env, ctx) -> bool:
    return funs.compare(a.op, _value(a.lhs, env, ctx), _value(a.rhs, env, ctx))


def frames(a, heap: HeapState, env: dict, ctx: _Ctx):
    """Set of footprints within ``heap`` on which ``a`` holds."""
    try:
        return _frames(a, heap, env, ctx)
    except FuelExhausted:
        ctx.give_up("evaluation fuel exhausted")
        return set()
    except EvalError as err:
        ctx.give_up(f"evaluation failed: {err}")
        return set()


def _frames(a, heap, env, ctx) -> set:
    match a:
        case Emp():
            return {frozenset()}
        case Pure():
            return {frozenset()} if _holds(a, env, ctx) else set()
        case Store(addr=x, value=v) | DataAt(addr=x, value=v):
            addr = eval_addr(x, env, ctx)
            if addr is None or addr not in heap:
                return set()
            return {frozenset({addr})} if values_equal(heap[addr], _value(v, env, ctx)) else set()
        case Pred():
            return set(_pred_frames(a, heap, env, ctx))
        case SepConj():
            parts = flatten(a, SepConj)
            acc = {frozenset()}
            for part in parts:
                nxt = set()
                for used in acc:
                    rest = heap.without(used)
                    for f in frames(part, rest, env, ctx):
                        nxt.add(used | f)
                acc = nxt
                if not acc:
                    break
            return acc
        case PureConj():
            parts = flatten(a, PureConj)
            facts = [p for p in parts if is_pure(p)]
            spatial = [p for p in parts if not is_pure(p)]
            for p in facts:
                if not frames(p, heap, env, ctx):
                    return set()
            if not spatial:
                return {frozenset()}
            acc = frames(spatial[0], heap, env, ctx)
            for p in spatial[1:]:
                if not acc:
                    break
                acc &= frames(p, heap, env, ctx)
            return acc
        case Disj(lhs=l, rhs=r):
            return frames(l, heap, env, ctx) | frames(r, heap, env, ctx)
        case Exists(vars=vs, body=b):
            out = set()
            for ext in witnesses(vs, b, heap, env, ctx):
                try:
                    out |= frames(b, heap, ext, ctx)
                except SortError:
                    continue
            return out
    raise TypeError(f"not an assertion: {a!r}")


# -- witness search -------------------------------------------------------------


def _evaluable(t, env) -> bool:
    from ..annot.ast import term_vars

    return all(v in env or v in ("nil", "empty", "NULL", "null") for v in term_vars(t))


def _determined(var, parts, heap, env, ctx):
    """Candidate values for ``var`` forced by one top-level conjunct, or None
    when no conjunct pins it down."""
    for p in parts:
        try:
            match p:
                case Pure(op="==", lhs=Var(name=n), rhs=t) if n == var and _evaluable(t, env):
                    return [_value(t, env, ctx)]
                case Pure(op="==", lhs=t, rhs=Var(name=n)) if n == var and _evaluable(t, env):
                    return [_value(t, env, ctx)]
                case Store(addr=x, value=Var(name=n)) | DataAt(addr=x, value=Var(name=n)) if (
                    n == var and _evaluable(x, env)
                ):
                    addr = eval_addr(x, env, ctx)
                    return [heap[addr]] if addr in heap else []
                case Pred(name="sll", args=(pt, Var(name=n))) if n == var and _evaluable(pt, env):
                    v = decode_sll(heap, _value(pt, env, ctx))
                    return [] if v is None else [v]
                case Pred(name="tree", args=(pt, Var(name=n))) if n == var and _evaluable(pt, env):
                    v = decode_tree(heap, _value(pt, env, ctx))
                    return [] if v is None else [v]
                case Pred(name="int_array" | "char_array", args=(pt, nt, Var(name=n))) if (
                    n == var and _evaluable(pt, env) and _evaluable(nt, env)
                ):
                    v = decode_array(heap, _value(pt, env, ctx), _value(nt, env, ctx))
                    return [] if v is None else [v]
                case Pred(name="int_array" | "char_array", args=(pt, Var(name=n), _)) if (
                    n == var and _evaluable(pt, env)
                ):
                    return [Int(k) for k in range(_run_length(heap, _value(pt, env, ctx)) + 1)]
                case Pred(name="sll" | "tree" | "int_array" | "char_array", args=(Var(name=n), *_)) if n == var:
                    return [NULL] + [Ptr(k) for k in sorted(heap.nodes())]
                case Store(addr=x) | DataAt(addr=x) if _addr_base_is(x, var):
                    return [Ptr(k) for k in sorted(heap.nodes())]
        except (SortError, UnboundVar):
            continue
    return None


def _run_length(heap, p) -> int:
    """Number of consecutive array cells starting at ``p``."""
    if not isinstance(p, Ptr) or p.is_null:
        return 0
    k = 0
    while FieldAddr(p.node, f"[{k}]") in heap:
        k += 1
    return k


def _addr_base_is(x, var) -> bool:
    match x:
        case App(fn="addr", args=(Field(base=Var(name=n)),)) | AddrOf(arg=Field(base=Var(name=n))):
            return n == var
        case Var(name=n):
            return n == var
    return False


def _top_parts(b) -> list:
    out = []
    for p in flatten(b, PureConj):
        out.extend(flatten(p, SepConj))
    return out


def witness_domain(heap, env, radius: int = 1) -> list:
    """Fallback candidates: every value around, pointers, nearby integers,
    sublists and subtrees."""
    seen, out = set(), []

    def add(v):
        key = (type(v).__name__, repr(v))
        if key not in seen:
            seen.add(key)
            out.append(v)

    ints = set()

    def visit(v):
        if isinstance(v, Int):
            ints.add(v.value)
        elif isinstance(v, (ListV, CharList)):
            items = list_items(v)
            for x in items:
                visit(x)
            for i in range(len(items) + 1):
                for j in range(i, len(items) + 1):
                    add(ListV(items[i:j]))
        elif isinstance(v, Node):
            add(v)
            visit(v.val)
            visit(v.left)
            visit(v.right)
        add(v)

    for v in list(heap.values()) + list(env.values()):
        visit(v)
    add(NULL)
    add(NIL)
    add(EMPTY)
    for k in sorted(heap.nodes()):
        add(Ptr(k))
    for i in sorted(ints | {0}):
        for d in range(-radius, radius + 1):
            add(Int(i + d))
    return out


def witnesses(vs, body, heap, env, ctx):
    """Yield extensions of ``env`` binding ``vs``.

    Variables pinned by a top-level conjunct are tried first and exactly; any
    other variable ranges over the bounded fallback domain, which makes a
    negative answer inconclusive.
    """
    parts = _top_parts(body)
    pending = [v for v in vs]

    def go(pending, env):
        if not pending:
            ctx.assignments += 1
            if ctx.assignments > ctx.cfg.max_assignments:
                ctx.give_up("witness bound exceeded")
                return
            yield env
            return
        for i, var in enumerate(pending):
            cands = _determined(var, parts, heap, env, ctx)
            if cands is not None:
                rest = pending[:i] + pending[i + 1 :]
                for c in cands:
                    yield from go(rest, {**env, var: c})
                    if ctx.assignments > ctx.cfg.max_assignments:
                        return
                return
        var, rest = pending[0], pending[1:]
        if var not in ctx.unbounded:
            ctx.unbounded.append(var)
        ctx.give_up(f"witness for '{var}' searched in a bounded domain")
        for c in witness_domain(heap, env, ctx.cfg.int_radius):
            yield from go(rest, {**env, var: c})
            if ctx.assignments > ctx.cfg.max_assignments:
                return

    # Shadowed names are rebound, so drop them first.
    base = {k: v for k, v in env.items() if k not in vs}
    yield from go(pending, base)


# -- entry points ---------------------------------------------------------------


def sort_env_for(env: dict, cfg: SearchConfig, predicates=None) -> SortEnv:
    return SortEnv.build(
        vars={k: value_sort(v) for k, v in env.items()},
        functions=cfg.table.signatures(),
        predicates=predicates,
    )


@dataclass(frozen=True)
class Outcome:
    result: SatResult
    reasons: tuple = ()


def check(h: HeapState, a, env: dict, cfg: SearchConfig | None = None) -> Outcome:
    cfg = cfg or SearchConfig()
    if cfg.check_sorts:
        check_assertion(a, sort_env_for(env, cfg))
    ctx = _Ctx(cfg)
    found = frames(a, h, env, ctx)
    if h.domain in found:
        return Outcome(Sat)
    return Outcome(Unknown if ctx.incomplete else Unsat, tuple(ctx.reasons))


def satisfies(h: HeapState, a, env: dict, cfg: SearchConfig | None = None) -> SatResult:
    """Sat / Unsat / Unknown for ``h |= a`` under ``env``."""
    return check(h, a, env, cfg).result


@dataclass(frozen=True)
class Models:
    """Assignments of ``vars`` under which ``h |= a``."""

    envs: tuple
    complete: bool
    unbounded: tuple  # variables only reachable through the bounded domain
    reasons: tuple = ()


def solve(vars, a, h: HeapState, env: dict, cfg: SearchConfig | None = None) -> Models:
    """Find every binding of ``vars`` making ``h |= a`` (used to resolve the
    logical variables of a precondition against a concrete input heap)."""
    cfg = cfg or SearchConfig()
    ctx = _Ctx(cfg)
    found = []
    for ext in witnesses(tuple(vars), a, h, env, ctx):
        try:
            if h.domain in frames(a, h, ext, ctx):
                found.append(ext)
        except SortError:
            continue
    return Models(tuple(found), not ctx.incomplete, tuple(ctx.unbounded), tuple(ctx.reasons))

