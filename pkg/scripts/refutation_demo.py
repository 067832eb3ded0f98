#!/usr/bin/env python3
"""Refute a flawed tree-insertion specification on two examples.

The candidate claims the function inserts ``val + 1``.  The script checks it,
derives refutation cases from the examples, prints the Coq goal for each,
and decides them with the builtin procedure.  A corrected candidate is
decided the same way for contrast.

    python3 scripts/refutation_demo.py
"""

from __future__ import annotations

import sys

from slspec.annot.signature import transform_signature
from slspec.checker import Candidate, check_candidate
from slspec.logic.satisfy import SearchConfig
from slspec.refutation import emit_coq_goal, refute_spec
from slspec.testcases import canonicalize, complete_lengths, derive_refutation_case, parse_typed_response

SIG = "struct TreeNode* insertIntoBST(struct TreeNode* tr, int val)"
EXAMPLES = (
    "tr : tree = [4, 2, 7, 1, 3]\nval : Z = 5\noutput : tree = [4, 2, 7, 1, 3, 5]",
    "tr : tree = []\nval : Z = 4\noutput : tree = [4]",
)


def candidate(ensure: str) -> str:
    return (
        "/*@ Extern Coq (tree_insert: Z -> tree -> tree) */\n"
        f"{SIG}\n"
        f"/*@ With (t: tree)\n    Require tree(tr, t)\n    Ensure {ensure} */\n;\n"
    )


def decide(label: str, text: str) -> str:
    res = check_candidate(Candidate(text))
    if not res.ok:
        raise SystemExit("\n".join(d.raw_text for d in res.diagnostics))
    mapping = transform_signature(res.source.signature)
    spec = res.source.funcspec
    cases = []
    for i, typed in enumerate(EXAMPLES, start=1):
        ce = canonicalize(complete_lengths(parse_typed_response(typed, mapping), mapping))
        cases.append(derive_refutation_case(ce, spec, mapping, f"case-{i}"))
    print(f"== {label}")
    for i, rc in enumerate(cases, start=1):
        print(emit_coq_goal(rc, i))
    verdict = refute_spec(spec, cases, None, mapping, res.table, SearchConfig(defs=res.table))
    for cv in verdict.cases:
        print(f"  {cv.case_id}: {cv.status} ({cv.kind}) {cv.report}")
    print(f"  aggregate: {verdict.status}\n")
    return str(verdict.status)


def main() -> int:
    flawed = decide("flawed: inserts val + 1", candidate("tree(__return, tree_insert(val + 1, t))"))
    fixed = decide("corrected", candidate("tree(__return, tree_insert(val, t))"))
    return 0 if (flawed, fixed) == ("Refuted", "NotRefuted") else 1


if __name__ == "__main__":
    sys.exit(main())
