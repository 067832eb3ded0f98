"""Concrete heaps: finite maps from field addresses to logic values."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass


@dataclass(frozen=True)
class FieldAddr:
    node: int
    field: str

    def __post_init__(self):
        if not isinstance(self.node, int) or self.node < 1:
            raise ValueError(f"node ids are positive integers, got {self.node!r}")

    def __repr__(self):
        return f"({self.node},{self.field})"


@dataclass(frozen=True)
class StackCell:
    """The cell of a C local/parameter, as addressed by ``&x``."""

    name: str

    def __repr__(self):
        return f"(&{self.name})"


def addr_key(a):
    if isinstance(a, FieldAddr):
        return (0, a.node, a.field)
    return (1, 0, a.name)


class HeapState(Mapping):
    """Immutable heap.  Equality and hashing are by content."""

    __slots__ = ("_cells", "_hash")

    def __init__(self, cells=None):
        self._cells = dict(cells or {})
        self._hash = None

    def __getitem__(self, key):
        return self._cells[key]

    def __iter__(self):
        return iter(sorted(self._cells, key=addr_key))

    def __len__(self):
        return len(self._cells)

    def __eq__(self, other):
        if isinstance(other, HeapState):
            return self._cells == other._cells
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._cells.items()))
        return self._hash

    def __repr__(self):
        inner = ", ".join(f"{a!r}↦{self._cells[a]!r}" for a in self)
        return f"HeapState({{{inner}}})"

    @property
    def domain(self) -> frozenset:
        return frozenset(self._cells)

    def nodes(self) -> set:
        return {a.node for a in self._cells if isinstance(a, FieldAddr)}

    def disjoint(self, other: "HeapState") -> bool:
        return not (self.domain & other.domain)

    def union(self, other: "HeapState") -> "HeapState":
        """Disjoint union; overlapping domains are an error."""
        if not self.disjoint(other):
            raise ValueError("heaps overlap")
        merged = dict(self._cells)
        merged.update(other._cells)
        return HeapState(merged)

    def restrict(self, addrs) -> "HeapState":
        return HeapState({a: self._cells[a] for a in addrs if a in self._cells})

    def without(self, addrs) -> "HeapState":
        drop = set(addrs)
        return HeapState({a: v for a, v in self._cells.items() if a not in drop})

    def renumber(self, offset: int) -> "HeapState":
        """Shift every node id (and pointer value) by ``offset``."""
        from .values import Ptr

        def shift(v):
            return Ptr(v.node + offset) if isinstance(v, Ptr) and v.node is not None else v

        out = {}
        for a, v in self._cells.items():
            key = FieldAddr(a.node + offset, a.field) if isinstance(a, FieldAddr) else a
            out[key] = shift(v)
        return HeapState(out)


EMPTY_HEAP = HeapState()
