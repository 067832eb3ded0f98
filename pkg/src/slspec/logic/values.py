"""Logical values: the concrete semantic domain of assertions and terms."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union


@dataclass(frozen=True)
class Int:
    value: int

    def __repr__(self):
        return f"Int({self.value})"


@dataclass(frozen=True)
class ListV:
    items: tuple = ()

    def __repr__(self):
        return f"ListV({list(self.items)!r})"


@dataclass(frozen=True)
class CharList:
    """A string, stored as ASCII/Unicode code points."""

    codes: tuple = ()

    @classmethod
    def from_str(cls, s: str) -> "CharList":
        return cls(tuple(ord(c) for c in s))

    def as_str(self) -> str:
        return "".join(chr(c) for c in self.codes)


@dataclass(frozen=True)
class Empty:
    def __repr__(self):
        return "Empty"


@dataclass(frozen=True)
class Node:
    left: "Tree"
    val: "LogicValue"
    right: "Tree"


@dataclass(frozen=True)
class Ptr:
    node: int | None = None

    @property
    def is_null(self) -> bool:
        return self.node is None

    def __repr__(self):
        return "Ptr(null)" if self.node is None else f"Ptr({self.node})"


@dataclass(frozen=True)
class Unit:
    pass


Tree = Union[Empty, Node]
LogicValue = Union[Int, ListV, CharList, Empty, Node, Ptr, Unit]

EMPTY = Empty()
NULL = Ptr(None)
NIL = ListV(())
UNIT = Unit()


def mk_list(xs) -> ListV:
    return ListV(tuple(Int(x) if isinstance(x, int) else x for x in xs))


def leaf(v) -> Node:
    return Node(EMPTY, Int(v) if isinstance(v, int) else v, EMPTY)


def list_items(v) -> tuple | None:
    """Elements of a list-like value (strings count as lists of codes)."""
    if isinstance(v, ListV):
        return v.items
    if isinstance(v, CharList):
        return tuple(Int(c) for c in v.codes)
    return None


def normalize(v):
    """Forget the string/list distinction so values compare by content."""
    if isinstance(v, CharList):
        return ListV(tuple(Int(c) for c in v.codes))
    if isinstance(v, ListV):
        return ListV(tuple(normalize(x) for x in v.items))
    if isinstance(v, Node):
        return Node(normalize(v.left), normalize(v.val), normalize(v.right))
    return v


def values_equal(a, b) -> bool:
    return normalize(a) == normalize(b)


def tree_size(t) -> int:
    if isinstance(t, Node):
        return 1 + tree_size(t.left) + tree_size(t.right)
    return 0


def value_sort(v) -> str:
    """Logic sort of a value; strings are code lists, so they report ``list Z``."""
    if isinstance(v, Int):
        return "Z"
    if isinstance(v, (ListV, CharList)):
        return "list Z"
    if isinstance(v, (Empty, Node)):
        return "tree"
    if isinstance(v, Ptr):
        return "ptr"
    return "unit"


def coq_literal(v, top: bool = True) -> str:
    """Canonical Coq literal for a value.

    Integers are decimal with negatives parenthesized, lists are ``::`` chains
    ending in ``nil``, trees are nested ``make_tree`` applications (always
    parenthesized), ``empty`` is the empty tree.
    """
    if isinstance(v, Int):
        return str(v.value) if v.value >= 0 else f"(-{-v.value})"
    if isinstance(v, (ListV, CharList)):
        items = list_items(v)
        if not items:
            return "nil"
        parts = [coq_literal(x, top=False) for x in items]
        body = " :: ".join(parts + ["nil"])
        return body if top else f"({body})"
    if isinstance(v, Empty):
        return "empty"
    if isinstance(v, Node):
        return f"(make_tree {coq_literal(v.left, False)} {coq_literal(v.val, False)} {coq_literal(v.right, False)})"
    if isinstance(v, Ptr):
        return "null" if v.is_null else f"(ptr {v.node})"
    return "tt"


def show(v) -> str:
    """Short human-readable rendering used in reports."""
    if isinstance(v, Int):
        return str(v.value)
    if isinstance(v, CharList):
        return repr(v.as_str())
    if isinstance(v, ListV):
        return "[" + ", ".join(show(x) for x in v.items) + "]"
    if isinstance(v, Empty):
        return "empty"
    if isinstance(v, Node):
        return f"node({show(v.left)}, {show(v.val)}, {show(v.right)})"
    if isinstance(v, Ptr):
        return "null" if v.is_null else f"&{v.node}"
    return "tt"
