"""Canonical heap layouts for values, and exhaustive heap enumeration."""

from __future__ import annotations

import itertools

from ..annot.ast import IntLit, Pred
from ..errors import ShapeMismatch
from .heap import EMPTY_HEAP, FieldAddr, HeapState
from .values import NULL, CharList, Empty, Int, ListV, Node, Ptr, list_items

SHAPES = ("sll", "tree", "scalar", "int-array", "char-array")
ALL_FIELDS = ("data", "next", "val", "left", "right")


def layout(v, shape: str, start: int = 1):
    """Lay ``v`` out from node id ``start``.

    Returns ``(cells, root, next_free_id)``; node ids follow preorder.
    """
    if shape == "scalar":
        if isinstance(v, (ListV, CharList, Empty, Node)):
            raise ShapeMismatch(f"aggregate value {v!r} with scalar shape")
        return {}, v, start
    if shape == "sll":
        items = list_items(v)
        if items is None:
            raise ShapeMismatch(f"{type(v).__name__} value with sll shape")
        cells = {}
        for i, x in enumerate(items):
            n = start + i
            cells[FieldAddr(n, "data")] = x
            cells[FieldAddr(n, "next")] = Ptr(n + 1) if i + 1 < len(items) else NULL
        root = Ptr(start) if items else NULL
        return cells, root, start + len(items)
    if shape == "tree":
        if not isinstance(v, (Empty, Node)):
            raise ShapeMismatch(f"{type(v).__name__} value with tree shape")
        cells = {}
        nxt = start

        def go(t):
            nonlocal nxt
            if isinstance(t, Empty):
                return NULL
            me = nxt
            nxt += 1
            cells[FieldAddr(me, "val")] = t.val
            cells[FieldAddr(me, "left")] = go(t.left)
            cells[FieldAddr(me, "right")] = go(t.right)
            return Ptr(me)

        root = go(v)
        return cells, root, nxt
    if shape in ("int-array", "char-array"):
        items = list_items(v)
        if items is None:
            raise ShapeMismatch(f"{type(v).__name__} value with {shape} shape")
        if not items:
            return {}, NULL, start
        cells = {FieldAddr(start, f"[{i}]"): x for i, x in enumerate(items)}
        return cells, Ptr(start), start + 1
    raise ShapeMismatch(f"unknown shape {shape!r}")


def build_canonical_heap(v, shape: str, start: int = 1):
    """``(HeapState, root)`` laying out ``v`` canonically."""
    cells, root, _ = layout(v, shape, start)
    return HeapState(cells), root


def shape_predicate(shape: str, root_term, value_term, length=None):
    """The assertion a canonical layout satisfies, e.g. ``sll(p, l)``."""
    if shape == "sll":
        return Pred("sll", (root_term, value_term))
    if shape == "tree":
        return Pred("tree", (root_term, value_term))
    if shape in ("int-array", "char-array"):
        name = "int_array" if shape == "int-array" else "char_array"
        n = length if length is not None else IntLit(0)
        return Pred(name, (root_term, n, value_term))
    raise ShapeMismatch(f"shape {shape!r} has no predicate")


def enumerate_heaps(max_nodes: int, value_domain, fields=ALL_FIELDS):
    """Every heap over node ids ``1..max_nodes`` and the given fields.

    Each cell is absent or holds a domain value, ``null`` or a pointer to one
    of the nodes, so there are ``(|D| + n + 2) ** (n * |fields|)`` heaps.
    """
    n = max_nodes
    if n == 0:
        yield EMPTY_HEAP
        return
    values = []
    for d in value_domain:
        values.append(Int(d) if isinstance(d, int) else d)
    values.append(NULL)
    values.extend(Ptr(k) for k in range(1, n + 1))
    addrs = [FieldAddr(k, f) for k in range(1, n + 1) for f in fields]
    choices = [None] + values
    for combo in itertools.product(choices, repeat=len(addrs)):
        yield HeapState({a: v for a, v in zip(addrs, combo) if v is not None})


def count_heaps(max_nodes: int, domain_size: int, n_fields: int) -> int:
    if max_nodes == 0:
        return 1
    return (domain_size + max_nodes + 2) ** (max_nodes * n_fields)
