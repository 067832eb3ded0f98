"""Hand-authored (spec, cases) corpus: five sound specifications and five
with one seeded flaw each."""

from __future__ import annotations

from dataclasses import dataclass

from slspec.annot.signature import transform_signature
from slspec.checker import Candidate, check_candidate
from slspec.testcases import canonicalize, complete_lengths, derive_refutation_case, parse_typed_response


@dataclass(frozen=True)
class Entry:
    name: str
    flawed: bool
    flaw: str
    text: str
    typed: tuple
    defs: str = ""


def _c(externs, sig, with_, require, ensure) -> str:
    head = "".join(f"/*@ Extern Coq ({e}) */\n" for e in externs)
    w = f"With {with_}\n    " if with_ else ""
    return f"{head}{sig}\n/*@ {w}Require {require}\n    Ensure {ensure} */\n;\n"


REV = "struct list* reverse(struct list* p)"
COPY = "struct list* copy(struct list* p)"
SUM = "int arraySum(int* a, int n)"
SUB = "int subtract(int a, int b)"
BST = "struct TreeNode* insertIntoBST(struct TreeNode* tr, int val)"
DEPTH = "int maxDepth(struct TreeNode* root)"

REV_CASES = ("p : list Z = [1, 2, 3]\noutput : list Z = [3, 2, 1]", "p : list Z = [7]\noutput : list Z = [7]")
COPY_CASES = ("p : list Z = [4, 5]\noutput : list Z = [4, 5]", "p : list Z = []\noutput : list Z = []")
SUM_CASES = ("a : list Z = [1, 2, 3]\noutput : Z = 6", "a : list Z = []\noutput : Z = 0")
SUB_CASES = ("a : Z = 5\nb : Z = 3\noutput : Z = 2", "a : Z = 0\nb : Z = 4\noutput : Z = -4")
BST_CASES = ("tr : tree = [4, 2, 7]\nval : Z = 5\noutput : tree = [4, 2, 7, null, null, 5]", "tr : tree = []\nval : Z = 4\noutput : tree = [4]")
DEPTH_CASES = ("root : tree = [3, 9, 20, null, null, 15, 7]\noutput : Z = 3", "root : tree = [1, null, 2]\noutput : Z = 2")

CORPUS = (
    # sound
    Entry("reverse", False, "", _c(["rev: list Z -> list Z"], REV, "(l: list Z)", "sll(p, l)", "sll(__return, rev(l))"), REV_CASES),
    Entry("copy", False, "", _c([], COPY, "(l: list Z)", "sll(p, l)", "sll(p, l) * sll(__return, l)"), COPY_CASES),
    Entry("sum", False, "", _c(["sum: list Z -> Z"], SUM, "(l: list Z)", "int_array(a, n, l)", "__return == sum(l) && int_array(a, n, l)"), SUM_CASES),
    Entry("subtract", False, "", _c([], SUB, "", "emp", "__return == a - b"), SUB_CASES),
    Entry("bst-insert", False, "", _c(["tree_insert: Z -> tree -> tree"], BST, "(t: tree)", "tree(tr, t)", "tree(__return, tree_insert(val, t))"), BST_CASES),
    # flawed
    Entry("sum-off-by-one", True, "off-by-one arithmetic", _c(["sum: list Z -> Z"], SUM, "(l: list Z)", "int_array(a, n, l)", "__return == sum(l) + 1 && int_array(a, n, l)"), SUM_CASES),
    Entry("subtract-swapped", True, "swapped arguments", _c([], SUB, "", "emp", "__return == b - a"), SUB_CASES),
    Entry("depth-wrong-function", True, "wrong function", _c(["tree_size: tree -> Z"], DEPTH, "(t: tree)", "tree(root, t)", "__return == tree_size(t) && tree(root, t)"), DEPTH_CASES),
    Entry("reverse-strong-require", True, "too-strong Require", _c(["rev: list Z -> list Z"], REV, "(l: list Z)", "sll(p, l) && Zlength(l) > 5", "sll(__return, rev(l))"), REV_CASES),
    Entry("copy-aliasing", True, "aliasing-permissive Ensure", _c([], COPY, "(l: list Z)", "sll(p, l)", "sll(p, l) && sll(__return, l)"), COPY_CASES),
)


def materialize(entry: Entry):
    """(spec, cases, mapping, table) for one corpus entry."""
    res = check_candidate(Candidate(entry.text, entry.defs))
    assert res.ok, (entry.name, [d.raw_text for d in res.diagnostics])
    mapping = transform_signature(res.source.signature)
    spec = res.source.funcspec
    cases = []
    for i, t in enumerate(entry.typed, start=1):
        ce = canonicalize(complete_lengths(parse_typed_response(t, mapping), mapping))
        rc = derive_refutation_case(ce, spec, mapping, f"case-{i}")
        assert rc is not None, entry.name
        cases.append(rc)
    return spec, cases, mapping, res.table
