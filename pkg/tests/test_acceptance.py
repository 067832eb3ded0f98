"""Acceptance criteria 1-10, one test each.

Every test records a PASS/FAIL line (shown in pytest's terminal summary and
printed when the file is run directly with ``python3 tests/test_acceptance.py``).
"""

from __future__ import annotations

import contextlib
import io
import itertools
import os
import random
import re
import sys
import tempfile
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

from conftest import (  # noqa: E402
    ACCEPTANCE_LINES,
    BST_BAD_SYNTAX,
    BST_PROBLEM,
    FIXTURES,
    REFERENCE_MD,
    bst_reply,
    bst_script,
    script_size,
    tree_files,
)
from corpus import CORPUS, materialize  # noqa: E402
from hypothesis import HealthCheck, given, settings  # noqa: E402
from hypothesis import strategies as st  # noqa: E402

from slspec import cli  # noqa: E402
from slspec.annot.ast import EXTERN_COQ, FUNC_SPEC, INV_ASSERT  # noqa: E402
from slspec.annot.parser import parse_assertion  # noqa: E402
from slspec.annot.source import parse_annotated_source, parse_equal, render_source  # noqa: E402
from slspec.annot.signature import transform_signature  # noqa: E402
from slspec.bench import Manifest, compute_distribution, render_distribution_markdown  # noqa: E402
from slspec.checker import Candidate, check_candidate  # noqa: E402
from slspec.diagnostics import Diagnostic, ErrorCategory, categorize  # noqa: E402
from slspec.errors import OracleParseFailure, SanityCheckFailure  # noqa: E402
from slspec.logic.canonical import build_canonical_heap, enumerate_heaps  # noqa: E402
from slspec.logic.heap import FieldAddr, HeapState  # noqa: E402
from slspec.logic.satisfy import Sat, SearchConfig, Unsat, satisfies  # noqa: E402
from slspec.logic.values import NULL, Int, Ptr, mk_list  # noqa: E402
from slspec.oracle import ScriptedBackend  # noqa: E402
from slspec.pipeline import PipelineConfig, run_problem  # noqa: E402
from slspec.problem import ProblemRecord  # noqa: E402
from slspec.refutation import NotRefuted, Refuted, Unknown, decide, negate_postcondition, refute_spec  # noqa: E402
from slspec.testcases import (  # noqa: E402
    FORBIDDEN_TOKENS,
    NLExample,
    RefutationCase,
    build_refutation_case,
    canonicalize,
    complete_lengths,
    parse_typed_response,
    sanity_check,
)


def record(n: int, ok: bool, detail: str):
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES[n] = line
    print(line)
    assert ok, line


# -- 1 ------------------------------------------------------------------------------------


def test_criterion_01_annotation_fidelity(reverse_text=None):
    text = reverse_text or (FIXTURES / "reverse_annotated.c").read_text()
    start = time.perf_counter()
    src = parse_annotated_source(text)
    kinds = [b.kind for b in src.annotations]
    counts = (kinds.count(EXTERN_COQ), kinds.count(FUNC_SPEC), kinds.count(INV_ASSERT))
    exact = render_source(src) == text
    canonical = render_source(src, canonical=True)
    again = parse_annotated_source(canonical)
    stable = parse_equal(src, again) and render_source(again, canonical=True) == canonical
    spec = src.funcspec
    shape_ok = (
        src.externs[0].name == "rev"
        and [n for n, _ in spec.with_params] == ["l"]
        and str(spec.require) == str(parse_assertion("sll(p, l)"))
        and str(spec.ensure) == str(parse_assertion("sll(__return, rev(l))"))
    )
    elapsed = time.perf_counter() - start
    ok = counts == (1, 1, 1) and exact and stable and shape_ok and elapsed < 1.0
    record(1, ok, f"blocks(Extern,FuncSpec,Inv)={counts}, byte round-trip={exact}, canonical fixpoint={stable}, {elapsed:.3f}s")


# -- 2 ------------------------------------------------------------------------------------


def _sll_direct(cells: dict, p, items: tuple) -> bool:
    """Direct recursion on the list: nil needs p == null and an empty heap;
    x :: l needs p's data and next cells, with the tail on the rest."""
    if not items:
        return p == NULL and not cells
    if p == NULL or not isinstance(p, Ptr):
        return False
    d, n = FieldAddr(p.node, "data"), FieldAddr(p.node, "next")
    if d not in cells or n not in cells or cells[d] != Int(items[0]):
        return False
    rest = {a: v for a, v in cells.items() if a not in (d, n)}
    return _sll_direct(rest, cells[n], items[1:])


def test_criterion_02_sll_semantics_oracle():
    start = time.perf_counter()
    a = parse_assertion("sll(p, l)")
    lists = [tuple(x) for k in range(3) for x in itertools.product((0, 1), repeat=k)]
    stats = {"checked": 0, "sat": 0, "disagree": 0}

    def compare(h, n):
        cells = dict(h)
        for p in [NULL] + [Ptr(k) for k in range(1, n + 1)]:
            for items in lists:
                got = satisfies(h, a, {"p": p, "l": mk_list(items)}) is Sat
                want = _sll_direct(cells, p, items)
                stats["checked"] += 1
                stats["sat"] += want
                stats["disagree"] += got != want

    # every field, exhaustively, up to one node
    for n in range(2):
        for h in enumerate_heaps(n, (0, 1)):
            compare(h, n)
    # two nodes: the list fields exhaustively ...
    for h in enumerate_heaps(2, (0, 1), fields=("data", "next")):
        compare(h, 2)
    # ... and a seeded sample of the full five-field space
    rng = random.Random(11)
    values = [Int(0), Int(1), NULL, Ptr(1), Ptr(2)]
    addrs = [FieldAddr(k, f) for k in (1, 2) for f in ("data", "next", "val", "left", "right")]
    for _ in range(3000):
        cells = {}
        for ad in addrs:
            pick = rng.randrange(len(values) + 1)
            if pick < len(values):
                cells[ad] = values[pick]
        compare(HeapState(cells), 2)
    elapsed = time.perf_counter() - start
    ok = stats["disagree"] == 0 and stats["sat"] > 0 and elapsed < 30
    record(2, ok, f"{stats['checked']} (heap, p, l) triples, {stats['sat']} satisfied, {stats['disagree']} disagreements, {elapsed:.1f}s")


# -- 3 ------------------------------------------------------------------------------------

_values = st.one_of(st.integers(-3, 3).map(Int), st.just(NULL), st.integers(1, 3).map(Ptr))
_heaps = st.dictionaries(
    st.builds(FieldAddr, st.integers(1, 3), st.sampled_from(["data", "next", "val"])), _values, max_size=6
).map(HeapState)
_STATS = {"self": 0, "compose": 0, "violations": 0}
SELF_SEP = parse_assertion("store(addr(p->data), x) * store(addr(p->data), y)")
TWO_LISTS = parse_assertion("sll(p, l1) * sll(q, l2)")


@settings(max_examples=600, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(_heaps, st.integers(1, 3), st.integers(-3, 3), st.integers(-3, 3))
def _self_separation(h, node, x, y):
    _STATS["self"] += 1
    env = {"p": Ptr(node), "x": Int(x), "y": Int(y)}
    # include heaps that do hold the cell
    for heap in (h, HeapState({**dict(h), FieldAddr(node, "data"): Int(x)})):
        if satisfies(heap, SELF_SEP, env) is not Unsat:
            _STATS["violations"] += 1


@settings(max_examples=600, deadline=None)
@given(st.lists(st.integers(-3, 3), max_size=3), st.lists(st.integers(-3, 3), max_size=3))
def _disjoint_compose(l1, l2):
    _STATS["compose"] += 1
    h1, r1 = build_canonical_heap(mk_list(l1), "sll", 1)
    h2, r2 = build_canonical_heap(mk_list(l2), "sll", 10)
    env = {"p": r1, "q": r2, "l1": mk_list(l1), "l2": mk_list(l2)}
    parts_ok = satisfies(h1, parse_assertion("sll(p, l1)"), env) is Sat and satisfies(h2, parse_assertion("sll(q, l2)"), env) is Sat
    if not (h1.disjoint(h2) and parts_ok and satisfies(h1.union(h2), TWO_LISTS, env) is Sat):
        _STATS["violations"] += 1
    # the same list twice cannot be separated from itself
    if l1 and satisfies(h1, parse_assertion("sll(p, l1) * sll(p, l1)"), env) is not Unsat:
        _STATS["violations"] += 1


def test_criterion_03_separation_law():
    for k in _STATS:
        _STATS[k] = 0
    _self_separation()
    _disjoint_compose()
    total = _STATS["self"] + _STATS["compose"]
    ok = total >= 1000 and _STATS["violations"] == 0
    record(3, ok, f"{total} generated cases ({_STATS['self']} self-separation, {_STATS['compose']} composition), {_STATS['violations']} violations")


# -- 4 ------------------------------------------------------------------------------------

BST_GOAL_CASE = RefutationCase(
    "case-2", (("tr", "empty"), ("val", "4")), "tree_insert (val + 1) tr", "(make_tree empty 4 empty)"
)


def _reference_goal() -> str:
    text = REFERENCE_MD.read_text(encoding="utf-8")
    m = re.search(r"^Example example2:\n.*?^Admitted\.\n", text, re.S | re.M)
    return m.group(0)


def _bst_insert(v, t):
    """Reference insertion on (left, value, right) tuples; None is the empty tree."""
    if t is None:
        return (None, v, None)
    l, x, r = t
    if v < x:
        return (_bst_insert(v, l), x, r)
    if v > x:
        return (l, x, _bst_insert(v, r))
    return t


def test_criterion_04_goal_reproduction(tmp_path=None):
    tmp = Path(tmp_path or tempfile.mkdtemp())
    case_file = tmp / "case.json"
    case_file.write_text(BST_GOAL_CASE.to_json())
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = cli.main(["emit-goal", str(case_file)])
    golden = _reference_goal()
    byte_exact = code == 0 and buf.getvalue() == golden
    spec_text = bst_reply("tree(__return, tree_insert(val + 1, t))").split("```c\n")[1].split("```")[0]
    res = check_candidate(Candidate(spec_text))
    mapping = transform_signature(res.source.signature)
    goal = negate_postcondition(res.source.funcspec, BST_GOAL_CASE, mapping, res.table)
    verdict = decide(goal, None, SearchConfig(defs=res.table))
    # independent oracle: tree_insert 5 empty versus make_tree empty 4 empty
    differs = _bst_insert(4 + 1, None) != (None, 4, None)
    ok = byte_exact and verdict.status is Refuted and differs
    record(4, ok, f"emit-goal byte-exact={byte_exact}, builtin verdict={verdict.status}, reference insert differs={differs}")


# -- 5 ------------------------------------------------------------------------------------


def test_criterion_05_refutation_soundness():
    false_refutations, missed, lines = [], [], []
    for e in CORPUS:
        spec, cases, mapping, table = materialize(e)
        v = refute_spec(spec, cases, None, mapping, table, SearchConfig(defs=table))
        lines.append(f"{e.name}={v.status}")
        if e.flawed and v.status is not Refuted:
            missed.append(e.name)
        if not e.flawed and v.status not in (NotRefuted, Unknown):
            false_refutations.append(e.name)
    n_flawed = sum(e.flawed for e in CORPUS)
    ok = len(CORPUS) >= 10 and n_flawed == 5 and not missed and not false_refutations
    record(5, ok, f"{len(CORPUS)} specs, flawed refuted {n_flawed - len(missed)}/{n_flawed}, false refutations {len(false_refutations)}")


# -- 6 ------------------------------------------------------------------------------------

SANITY_CASES = (
    ("struct TreeNode* insertIntoBST(struct TreeNode* tr, int val)", "tr : tree = []\nval : Z = 4\noutput : tree = [4]", "tree_insert (val + 1) tr"),
    ("struct list* reverse(struct list* p)", "p : list Z = [1, 2, 3]\noutput : list Z = [3, 2, 1]", "rev p"),
    ("int arraySum(int* a, int n)", "a : list Z = [1, 2]\noutput : Z = 3", "sum a"),
    ("int subtract(int a, int b)", "a : Z = 5\nb : Z = 3\noutput : Z = 2", "a - b"),
    ("int kthSmallest(struct TreeNode* root, int k)", "root : tree = [3, 1, 4]\nk : Z = 1\noutput : Z = 1", "nth (k - 1) (inorder root) 0"),
)


def _mutations(lines: list, rng: random.Random):
    """Every single-binding deletion plus forbidden-token injections."""
    lets = [i for i, l in enumerate(lines) if l.startswith("let ") and not l.startswith(("let result", "let expected"))]
    for i in lets:
        yield "delete", lines[:i] + lines[i + 1 :]
    for tok in FORBIDDEN_TOKENS:
        for i in range(len(lines)):
            # inside a term
            m = lines[i].replace(" in", f" {tok} in", 1) if lines[i].endswith(" in") else lines[i] + f" {tok}"
            yield "inject", lines[:i] + [m] + lines[i + 1 :]
        # as a declaration of its own, at a random line
        pos = rng.randrange(len(lines) + 1)
        decl = {"admit": "admit.", "Parameter": "Parameter cheat : Z.", "Axiom": "Axiom cheat : False."}[tok]
        yield "inject", lines[:pos] + [decl] + lines[pos:]


def test_criterion_06_sanity_checks():
    rng = random.Random(7)
    total = rejected = 0
    for sig, typed, result in SANITY_CASES:
        mapping = transform_signature(sig)
        te = complete_lengths(parse_typed_response(typed, mapping), mapping)
        ce = canonicalize(te)
        base = ce.bindings_text.splitlines() + [f"let result := {result} in", f"let expected := {ce.expected_text} in"]
        # the unmutated case passes
        prob = ProblemRecord("x", "t", "Easy", "d", sig, (NLExample("i", "o"),), frozenset())
        ok_case = build_refutation_case(ce, te, prob, "", mapping, ScriptedBackend({"refutation-case": ["\n".join(base)]}), "case-1", retries=0)
        assert not sanity_check(ok_case, mapping)
        for kind, lines in _mutations(base, rng):
            total += 1
            text = "\n".join(lines)
            oracle = ScriptedBackend({"refutation-case": [text]})
            try:
                build_refutation_case(ce, te, prob, "", mapping, oracle, "case-1", retries=0)
            except (SanityCheckFailure, OracleParseFailure):
                rejected += 1
    ok = total > 0 and rejected == total
    record(6, ok, f"{rejected}/{total} mutated cases rejected")


# -- 7 ------------------------------------------------------------------------------------


def test_criterion_07_pipeline_determinism(tmp_path=None):
    tmp = Path(tmp_path or tempfile.mkdtemp())
    results = []
    for k in range(2):
        script = bst_script()
        oracle = ScriptedBackend(script)
        run = run_problem(BST_PROBLEM, PipelineConfig(), oracle, root=tmp / f"ws{k}")
        results.append((run, oracle, script_size(bst_script()), tree_files(run.workspace)))
    (r1, o1, n1, f1), (r2, o2, n2, f2) = results
    states = [str(s) for s in r1.states]
    path_ok = "SyntaxFailed(AnnotLangConfusion)" in states and "Refuted(case-1)" in states and "SemanticRefine" in states
    ok = (
        r1.accepted
        and r2.accepted
        and o1.calls == n1
        and len(r1.oracle_calls) == n1
        and not o1.unused()
        and path_ok
        and f1 == f2
        and r1.workspace != r2.workspace
    )
    record(7, ok, f"outcome={r1.outcome()}, oracle calls {o1.calls}/{n1} scripted, workspaces identical={f1 == f2} ({len(f1)} files)")


# -- 8 ------------------------------------------------------------------------------------


def test_criterion_08_budget_enforcement(tmp_path=None):
    tmp = Path(tmp_path or tempfile.mkdtemp())
    o1 = ScriptedBackend({"generate": [BST_BAD_SYNTAX]})
    r1 = run_problem(BST_PROBLEM, PipelineConfig(max_syntax_iters=0), o1, root=tmp)
    wrong_sig = (
        "```c\nint insertIntoBST(struct TreeNode* tr, int val)\n"
        "/*@ With (t: tree)\n    Require tree(tr, t)\n    Ensure __return == 0 */\n;\n```\n"
    )
    o2 = ScriptedBackend({"generate": [wrong_sig]})
    r2 = run_problem(BST_PROBLEM, PipelineConfig(), o2, root=tmp)
    ok = (
        r1.outcome() == "Failed(budget)"
        and o1.calls == 1
        and r2.outcome() == "Failed(UnrecoverableDiagnostic)"
        and o2.calls == 1
    )
    record(8, ok, f"seeded syntax error with budget 0 -> {r1.outcome()}; unrecoverable fixture -> {r2.outcome()}")


# -- 9 ------------------------------------------------------------------------------------


def _reference_distribution() -> dict:
    text = REFERENCE_MD.read_text(encoding="utf-8")
    rows = re.findall(r"^([A-Za-z/ ]+?) & (\d+) & ([\d.]+) \\\\$", text, re.M)
    return {label: (int(c), p) for label, c, p in rows}


def _synthetic_manifest(diff_counts, ds_counts, size) -> Manifest:
    problems = []
    diffs = [d for d, c in diff_counts for _ in range(c)]
    for i in range(size):
        tags = frozenset(tag for tag, c in ds_counts if i < c)
        problems.append(ProblemRecord(str(i), f"p{i}", diffs[i], "d", "int f(int x)", (NLExample("x = 0", "0"),), tags))
    return Manifest("reference-distribution", tuple(problems))


def test_criterion_09_distribution_reproduction():
    ref = _reference_distribution()
    diff = (("Easy", 62), ("Medium", 97), ("Hard", 41))
    ds = (("integer", 147), ("array", 75), ("string", 53), ("tree", 41), ("linked-list", 14))
    dist = compute_distribution(_synthetic_manifest(diff, ds, 200))
    got_d = [str(p) for _, p in dist.percentages("difficulty")]
    got_s = [str(p) for _, p in dist.percentages("data_structures")]
    labels = ["Easy", "Medium", "Hard", "Integer/Number", "Array", "String", "Tree", "Linked List"]
    want = [ref[l][1] for l in labels]
    counts_match = [c for _, c in dist.difficulty + dist.data_structures] == [ref[l][0] for l in labels]
    md = render_distribution_markdown(dist)
    layout = md.index("**Difficulty**") < md.index("**Data Structure**")
    ok = got_d + got_s == want and counts_match and layout
    record(9, ok, f"difficulty {'/'.join(got_d)}, structures {'/'.join(got_s)} (reference {'/'.join(want)})")


# -- 10 -----------------------------------------------------------------------------------

REVERSE_SRC = (FIXTURES / "reverse_annotated.c").read_text()
SEEDED = (
    # (description, candidate text, defs, expected category)
    ("'=' for '=='", REVERSE_SRC.replace("Require sll(p, l)", "Require sll(p, l) && l = l"), "", ErrorCategory.ANNOT_LANG_CONFUSION),
    ("'/\\' for '&&'", REVERSE_SRC.replace("Require sll(p, l)", "Require sll(p, l) /\\ 0 == 0"), "", ErrorCategory.ANNOT_LANG_CONFUSION),
    ("'<>' for '!='", REVERSE_SRC.replace("Require sll(p, l)", "Require sll(p, l) && 0 <> 1"), "", ErrorCategory.ANNOT_LANG_CONFUSION),
    ("missing Extern", REVERSE_SRC.replace("/*@ Extern Coq (rev: list Z -> list Z) */\n", ""), "", ErrorCategory.PREDICATE_IMPORT),
    ("predicate arity", REVERSE_SRC.replace("Require sll(p, l)", "Require sll(p)"), "", ErrorCategory.ANNOT_BAD_PREDICATE_INSTANTIATION),
    ("predicate sort", REVERSE_SRC.replace("Require sll(p, l)", "Require sll(l, p)"), "", ErrorCategory.ANNOT_BAD_PREDICATE_INSTANTIATION),
    ("unknown predicate", REVERSE_SRC.replace("Require sll(p, l)", "Require slist(p, l)"), "", ErrorCategory.ANNOT_BAD_PREDICATE_INSTANTIATION),
    ("unbound variable", REVERSE_SRC.replace("rev(l)) */", "rev(m)) */"), "", ErrorCategory.ANNOT_MALFORMED_CLAUSE),
    ("missing Ensure", REVERSE_SRC.replace("\n    Ensure sll(__return, rev(l))", ""), "", ErrorCategory.ANNOT_MALFORMED_CLAUSE),
    ("__return in Require", REVERSE_SRC.replace("Require sll(p, l)", "Require sll(__return, l)"), "", ErrorCategory.ANNOT_MALFORMED_CLAUSE),
    ("unknown function", REVERSE_SRC.replace("rev(l)) */", "rev(frob(l))) */"), "", ErrorCategory.COQ_UNRESOLVED_IDENT),
    ("Extern without definition", REVERSE_SRC.replace("(rev: list Z -> list Z)", "(rev: list Z -> list Z) (revv: list Z -> list Z)"), "", ErrorCategory.COQ_UNRESOLVED_IDENT),
    ("duplicate definition", REVERSE_SRC, "def app(a: list Z, b: list Z): list Z := a.", ErrorCategory.COQ_UNRESOLVED_IDENT),
    ("function argument sort", REVERSE_SRC.replace("rev(l)) */", "rev(p)) */"), "", ErrorCategory.COQ_TYPE),
    ("function arity", REVERSE_SRC.replace("rev(l)) */", "rev(l, l)) */"), "", ErrorCategory.COQ_TYPE),
    ("Extern sort mismatch", REVERSE_SRC.replace("(rev: list Z -> list Z)", "(rev: Z -> Z)"), "", ErrorCategory.COQ_TYPE),
    ("definition body sort", REVERSE_SRC, "def f(x: Z): list Z := x.", ErrorCategory.COQ_TYPE),
    ("definition syntax", REVERSE_SRC, "def f(x: Z): Z := x +.", ErrorCategory.COQ_SYNTAX),
    ("definition missing period", REVERSE_SRC, "def f(x: Z): Z := x", ErrorCategory.COQ_SYNTAX),
)


def test_criterion_10_taxonomy_totality():
    rng = random.Random(2024)
    raised = bad_type = 0
    for i in range(10_000):
        raw = bytes(rng.randrange(256) for _ in range(rng.randrange(0, 120)))
        src = "annotation-checker" if i % 2 else "coq-checker"
        try:
            cat = categorize(Diagnostic(src, raw))
            bad_type += not isinstance(cat, ErrorCategory)
        except Exception:
            raised += 1
    leaks, wrong = [], []
    for name, text, defs, want in SEEDED:
        diags = check_candidate(Candidate(text, defs)).diagnostics
        cats = [categorize(d) for d in diags]
        if not diags or ErrorCategory.UNRECOVERABLE in cats:
            leaks.append(name)
        elif cats[0] is not want:
            wrong.append(f"{name}:{cats[0]}")
    ok = raised == 0 and bad_type == 0 and not leaks and not wrong
    record(10, ok, f"10000 random inputs, {raised} raised; {len(SEEDED)} seeded errors, {len(leaks)} Unrecoverable leaks, {len(wrong)} misfiled {wrong}")


if __name__ == "__main__":
    failures = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failures += 1
    sys.stdout.flush()
    os._exit(1 if failures else 0)
