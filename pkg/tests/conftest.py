from __future__ import annotations

from pathlib import Path

import pytest

from slspec.annot.signature import transform_signature
from slspec.problem import ProblemRecord
from slspec.testcases import NLExample, canonicalize, complete_lengths, parse_typed_response

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = Path(__file__).resolve().parent / "fixtures"
REFERENCE_MD = ROOT / "paper.md"

ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])


@pytest.fixture(scope="session")
def reverse_text() -> str:
    return (FIXTURES / "reverse_annotated.c").read_text()


# -- the tree-insertion scenario shared by pipeline, CLI and acceptance tests ---------------

BST_SIG = "struct TreeNode* insertIntoBST(struct TreeNode* tr, int val)"
BST_PROBLEM = ProblemRecord(
    "701",
    "Insert into a Binary Search Tree",
    "Medium",
    "Insert val into the binary search tree rooted at tr and return the root.",
    BST_SIG,
    (NLExample("tr = [4,2,7,1,3], val = 5", "[4,2,7,1,3,5]"), NLExample("tr = [], val = 4", "[4]")),
    frozenset({"tree", "integer"}),
)
BST_TYPED = (
    "tr : tree = [4, 2, 7, 1, 3]\nval : Z = 5\noutput : tree = [4, 2, 7, 1, 3, 5]",
    "tr : tree = []\nval : Z = 4\noutput : tree = [4]",
)


def bst_reply(ensure: str, require: str = "tree(tr, t)", extern: bool = True) -> str:
    head = "/*@ Extern Coq (tree_insert: Z -> tree -> tree) */\n" if extern else ""
    return (
        "```c\n"
        f"{head}{BST_SIG}\n"
        f"/*@ With (t: tree)\n    Require {require}\n    Ensure {ensure} */\n;\n"
        "```\n"
    )


BST_BAD_SYNTAX = bst_reply("exists r, r = tree_insert(val + 1, t) && tree(__return, r)")
BST_FLAWED = bst_reply("exists r, r == tree_insert(val + 1, t) && tree(__return, r)")
BST_GOOD = bst_reply("tree(__return, tree_insert(val, t))")


def case_reply(typed: str, result: str, signature: str = BST_SIG) -> str:
    mapping = transform_signature(signature)
    ce = canonicalize(complete_lengths(parse_typed_response(typed, mapping), mapping))
    return f"{ce.bindings_text}\nlet result := {result} in\nlet expected := {ce.expected_text} in"


def bst_script() -> dict:
    """Syntax error -> '==' repair -> refuted -> semantic repair -> accepted."""
    return {
        "generate": [BST_BAD_SYNTAX],
        "refine-syntax": [BST_FLAWED],
        "type-example": list(BST_TYPED),
        "refutation-case": [case_reply(t, "tree_insert (val + 1) tr") for t in BST_TYPED]
        + [case_reply(t, "tree_insert val tr") for t in BST_TYPED],
        "refine-semantic": [BST_GOOD],
    }


def script_size(script: dict) -> int:
    return sum(len(v) for v in script.values())


def tree_files(root: Path) -> dict:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}
