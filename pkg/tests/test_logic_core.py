import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slspec.annot.parser import parse_assertion, parse_term
from slspec.errors import DuplicateDef, FuelExhausted, ShapeMismatch, SortError, UnknownSymbol
from slspec.logic import funs
from slspec.logic.canonical import build_canonical_heap, count_heaps, enumerate_heaps, layout
from slspec.logic.heap import FieldAddr, HeapState
from slspec.logic.satisfy import Sat, SearchConfig, Unknown, Unsat, check, satisfies, solve
from slspec.logic.values import EMPTY, NULL, Int, ListV, Node, Ptr, leaf, mk_list, values_equal

SLL = parse_assertion("sll(p, l)")


def sll_heap(items, start=1):
    return build_canonical_heap(mk_list(items), "sll", start)


# -- heaps ------------------------------------------------------------------------------


def test_heap_is_an_immutable_mapping():
    h = HeapState({FieldAddr(1, "data"): Int(3)})
    assert h[FieldAddr(1, "data")] == Int(3)
    assert len(h) == 1 and h == HeapState(dict(h))
    with pytest.raises(TypeError):
        h[FieldAddr(2, "data")] = Int(1)


def test_union_requires_disjointness():
    a, _ = sll_heap([1])
    b, _ = sll_heap([2], start=5)
    assert a.disjoint(b) and len(a.union(b)) == 4
    with pytest.raises(ValueError):
        a.union(a)


def test_count_heaps_matches_enumeration():
    for n, d, f in [(0, 2, 2), (1, 2, 2), (2, 1, 1), (2, 2, 2)]:
        fields = ("data", "next")[:f]
        assert sum(1 for _ in enumerate_heaps(n, range(d), fields)) == count_heaps(n, d, f)


# -- canonical layout -------------------------------------------------------------------


def test_sll_layout():
    h, root = sll_heap([7, 8])
    assert root == Ptr(1)
    assert dict(h) == {
        FieldAddr(1, "data"): Int(7),
        FieldAddr(1, "next"): Ptr(2),
        FieldAddr(2, "data"): Int(8),
        FieldAddr(2, "next"): NULL,
    }


def test_empty_structures_are_null():
    assert build_canonical_heap(mk_list([]), "sll") == (HeapState({}), NULL)
    assert build_canonical_heap(EMPTY, "tree") == (HeapState({}), NULL)
    assert build_canonical_heap(mk_list([]), "int-array") == (HeapState({}), NULL)


def test_tree_layout_is_preorder():
    t = Node(leaf(Int(1)), Int(2), leaf(Int(3)))
    cells, root, nxt = layout(t, "tree")
    assert root == Ptr(1) and nxt == 4
    assert cells[FieldAddr(1, "left")] == Ptr(2) and cells[FieldAddr(1, "right")] == Ptr(3)


def test_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        layout(Int(3), "sll")
    with pytest.raises(ShapeMismatch):
        layout(mk_list([1]), "tree")


# -- satisfaction -----------------------------------------------------------------------


def test_sll_exact_footprint():
    h, root = sll_heap([1, 2])
    env = {"p": root, "l": mk_list([1, 2])}
    assert satisfies(h, SLL, env) is Sat
    assert satisfies(h, SLL, {"p": root, "l": mk_list([2, 1])}) is Unsat
    extra = HeapState({**dict(h), FieldAddr(9, "data"): Int(0)})
    assert satisfies(extra, SLL, env) is Unsat  # no garbage allowed


def test_emp_and_pure():
    assert satisfies(HeapState({}), parse_assertion("emp && x == 1"), {"x": Int(1)}) is Sat
    assert satisfies(HeapState({}), parse_assertion("x > 1"), {"x": Int(1)}) is Unsat


def test_separating_conjunction_splits_heap():
    h1, r1 = sll_heap([1])
    h2, r2 = sll_heap([2], start=2)
    env = {"p": r1, "q": r2, "a": mk_list([1]), "b": mk_list([2])}
    assert satisfies(h1.union(h2), parse_assertion("sll(p, a) * sll(q, b)"), env) is Sat
    assert satisfies(h1.union(h2), parse_assertion("sll(p, a) && sll(q, b)"), env) is Unsat


def test_pure_conjunction_shares_footprint():
    h, r = sll_heap([1])
    env = {"p": r, "q": r, "a": mk_list([1])}
    assert satisfies(h, parse_assertion("sll(p, a) && sll(q, a)"), env) is Sat


def test_disjunction():
    h, r = sll_heap([4])
    a = parse_assertion("sll(p, l) && Zlength(l) == 0 || sll(p, l) && Zlength(l) == 1")
    assert satisfies(h, a, {"p": r, "l": mk_list([4])}) is Sat


def test_existential_witness_from_heap():
    h, r = sll_heap([3, 4])
    a = parse_assertion("exists l, sll(p, l) && Zlength(l) == 2")
    assert satisfies(h, a, {"p": r}) is Sat
    assert satisfies(h, parse_assertion("exists l, sll(p, l) && Zlength(l) == 3"), {"p": r}) is Unsat


def test_store_cell():
    h = HeapState({FieldAddr(1, "data"): Int(5)})
    a = parse_assertion("store(addr(p->data), x)")
    assert satisfies(h, a, {"p": Ptr(1), "x": Int(5)}) is Sat
    assert satisfies(h, a, {"p": Ptr(1), "x": Int(6)}) is Unsat


def test_unbounded_integer_witness_is_unknown():
    out = check(HeapState({}), parse_assertion("exists k, k > 1000 && emp"), {}, SearchConfig())
    # nothing determines k and the bounded domain cannot settle it
    assert out.result is Unknown
    out = check(HeapState({}), parse_assertion("exists k, k == 12345 + 1 && emp"), {})
    assert out.result is Sat


def test_solve_recovers_with_variables():
    h, r = sll_heap([5, 6])
    models = solve(("l",), SLL, h, {"p": r})
    assert [m["l"] for m in models.envs] == [mk_list([5, 6])]
    assert models.complete and models.unbounded == ()


def test_tree_predicate():
    t = Node(EMPTY, Int(2), leaf(Int(3)))
    h, r = build_canonical_heap(t, "tree")
    assert satisfies(h, parse_assertion("tree(p, t)"), {"p": r, "t": t}) is Sat
    assert satisfies(h, parse_assertion("tree(p, t)"), {"p": r, "t": leaf(Int(2))}) is Unsat


def test_int_array():
    h, r = build_canonical_heap(mk_list([1, 2, 3]), "int-array")
    a = parse_assertion("int_array(a, n, l)")
    assert satisfies(h, a, {"a": r, "n": Int(3), "l": mk_list([1, 2, 3])}) is Sat
    assert satisfies(h, a, {"a": r, "n": Int(2), "l": mk_list([1, 2])}) is Unsat


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(-5, 5), max_size=5), st.lists(st.integers(-5, 5), max_size=5))
def test_canonical_heap_satisfies_its_predicate(xs, ys):
    h, r = sll_heap(xs)
    assert satisfies(h, SLL, {"p": r, "l": mk_list(xs)}) is Sat
    if xs != ys:
        assert satisfies(h, SLL, {"p": r, "l": mk_list(ys)}) is Unsat


# -- definitions and evaluation --------------------------------------------------------


def ev(text, **env):
    return funs.eval_term(parse_term(text), {k: (Int(v) if isinstance(v, int) else v) for k, v in env.items()})


def test_library_functions():
    assert ev("rev(l)", l=mk_list([1, 2, 3])) == mk_list([3, 2, 1])
    assert ev("sum(l)", l=mk_list([1, 2, 3])) == Int(6)
    assert ev("app(a, b)", a=mk_list([1]), b=mk_list([2])) == mk_list([1, 2])
    assert ev("nth(1, l, 0)", l=mk_list([4, 5])) == Int(5)
    assert ev("tree_size(tree_insert(5, tree_insert(3, empty)))") == Int(2)


@pytest.mark.parametrize("a,b", [(7, 2), (-7, 2), (7, -2), (-7, -2), (5, 0), (0, 3)])
def test_division_follows_floor_semantics(a, b):
    q = ev("a / b", a=a, b=b)
    r = ev("a % b", a=a, b=b)
    if b == 0:
        assert (q, r) == (Int(0), Int(a))
    else:
        assert q.value * b + r.value == a
        assert r.value == 0 or (r.value > 0) == (b > 0)


def test_fuel_exhaustion():
    table = funs.table_from_text("def loop(n: Z): Z := loop(n + 1).", funs.prelude())
    with pytest.raises(FuelExhausted):
        funs.eval_term(parse_term("loop(0)"), {}, table, fuel=500)


def test_user_defs_parse_and_check():
    text = """
    (* count positives *)
    def pos(l: list Z): Z :=
      match l with
      | nil => 0
      | x :: xs => if x > 0 then 1 + pos(xs) else pos(xs)
      end.
    """
    table = funs.table_from_text(text, funs.prelude())
    assert funs.eval_term(parse_term("pos(l)"), {"l": mk_list([1, -2, 3])}, table) == Int(2)


def test_defs_errors():
    with pytest.raises(DuplicateDef):
        funs.table_from_text("def app(a: Z): Z := a.", funs.prelude())
    with pytest.raises(UnknownSymbol):
        funs.table_from_text("def f(a: Z): Z := g(a).", funs.prelude())
    with pytest.raises(SortError):
        funs.table_from_text("def f(a: Z): list Z := a.", funs.prelude())


def test_definition_source_round_trips():
    src = funs.definition_source("rev")
    assert src.startswith("def rev(") and src.endswith(".")
    table = funs.table_from_text(src, funs.prelude())
    assert "rev" in table
    assert funs.definition_source("nonexistent") is None
    assert funs.import_required("rev") and not funs.import_required("app")


def test_values_equal_identifies_lists():
    assert values_equal(mk_list([1, 2]), ListV((Int(1), Int(2))))
    assert not values_equal(mk_list([1]), mk_list([1, 1]))


def test_exhaustive_small_sll():
    """Decoding agrees with satisfaction on every small heap."""
    from slspec.logic.satisfy import decode_sll

    for h in enumerate_heaps(2, (0,), fields=("data", "next")):
        for p in (NULL, Ptr(1), Ptr(2)):
            dec = decode_sll(h, p)
            if dec is None:
                continue
            full = len(h) == 2 * len(dec.items)
            env = {"p": p, "l": dec}
            assert (satisfies(h, SLL, env) is Sat) == full


def test_product_of_domains():
    assert list(itertools.islice(enumerate_heaps(0, (1,)), 3)) == [HeapState({})]


def test_sll_is_precise():
    """Each short list has exactly one satisfying heap with the canonical root."""
    lists = [tuple(x) for k in range(3) for x in itertools.product((0, 1), repeat=k)]
    heaps = list(enumerate_heaps(2, (0, 1), fields=("data", "next")))
    for items in lists:
        _, root = sll_heap(items)
        env = {"p": root, "l": mk_list(items)}
        matches = [h for h in heaps if satisfies(h, SLL, env) is Sat]
        assert len(matches) == 1, items
        assert matches[0] == sll_heap(items)[0]


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(-9, 9), max_size=8), st.integers(200, 2000))
def test_evaluation_is_deterministic_and_fuel_monotone(xs, extra):
    t = parse_term("rev(app(l, rev(l)))")
    env = {"l": mk_list(xs)}
    needed = None
    for f in (1, 5, 20, 50, 100, 200):
        try:
            needed = (f, funs.eval_term(t, env, fuel=f))
            break
        except FuelExhausted:
            continue
    if needed is None:
        needed = (2000, funs.eval_term(t, env, fuel=2000))
    f, v = needed
    assert funs.eval_term(t, env, fuel=f) == v
    assert funs.eval_term(t, env, fuel=f + extra) == v
