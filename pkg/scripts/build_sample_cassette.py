#!/usr/bin/env python3
"""Regenerate the sample replay cassette from hand-authored oracle scripts.

Each problem of the sample manifest gets a scripted conversation (what the
model "says" at every stage).  The script runs the real pipeline against a
ScriptedBackend, checks the terminal state it was written to produce, and
merges the recorded exchanges into one cassette plus an expected-outcome
file.

    python3 scripts/build_sample_cassette.py [--out DIR]
"""

from __future__ import annotations

import argparse
import json
import sys
import tempfile
from pathlib import Path

from slspec.annot.signature import transform_signature
from slspec.annot.source import parse_annotated_source
from slspec.bench import load_manifest
from slspec.oracle import Cassette, ScriptedBackend
from slspec.pipeline import PipelineConfig, run_problem
from slspec.testcases import canonicalize, complete_lengths, derive_result_term, parse_typed_response

SAMPLES = Path(__file__).resolve().parent.parent / "src" / "slspec" / "data" / "samples"


def reply(code: str, defs: str = "") -> str:
    out = "Here is the specification.\n\n```c\n" + code.strip() + "\n```\n"
    if defs:
        out += "\n```defs\n" + defs.strip() + "\n```\n"
    return out


def spec(externs, sig, with_, require, ensure) -> str:
    head = "".join(f"/*@ Extern Coq ({e}) */\n" for e in externs)
    w = f"With {with_}\n    " if with_ else ""
    return f"{head}{sig}\n/*@ {w}Require {require}\n    Ensure {ensure} */\n;"


# -- per-problem scripts ---------------------------------------------------------------------

SIG = {}


def scenarios():
    s = {}

    # 206: accepted on the first candidate
    s["206"] = dict(
        outcome="Accepted",
        candidates=[reply(spec(["rev: list Z -> list Z"], SIG["206"], "(l: list Z)", "sll(head, l)", "sll(__return, rev(l))"))],
        typed=[
            "head : list Z = [1, 2, 3, 4, 5]\noutput : list Z = [5, 4, 3, 2, 1]",
            "head : list Z = [1, 2]\noutput : list Z = [2, 1]",
            "head : list Z = []\noutput : list Z = []",
        ],
    )

    # 701: '=' typo, repaired; then the val + 1 claim is refuted and repaired
    t701 = ["tree_insert: Z -> tree -> tree"]
    s["701"] = dict(
        outcome="Accepted",
        generate=[
            reply(spec(t701, SIG["701"], "(t: tree)", "tree(tr, t)", "exists r, r = tree_insert(val + 1, t) && tree(__return, r)"))
        ],
        syntax=[
            reply(spec(t701, SIG["701"], "(t: tree)", "tree(tr, t)", "exists r, r == tree_insert(val + 1, t) && tree(__return, r)"))
        ],
        semantic=[reply(spec(t701, SIG["701"], "(t: tree)", "tree(tr, t)", "tree(__return, tree_insert(val, t))"))],
        typed=[
            "tr : tree = [4, 2, 7, 1, 3]\nval : Z = 5\noutput : tree = [4, 2, 7, 1, 3, 5]",
            "tr : tree = []\nval : Z = 4\noutput : tree = [4]",
        ],
    )

    # 20: the candidate changes the prototype, which no repair can fix
    s["20"] = dict(
        outcome="Failed(UnrecoverableDiagnostic)",
        generate=[reply(spec([], "int isValid(char* s)", "(l: list Z) (n: Z)", "char_array(s, n, l)", "__return == 1"))],
    )

    # 104: missing import, regenerated through the import path
    s["104"] = dict(
        outcome="Accepted",
        generate=[reply(spec([], SIG["104"], "(t: tree)", "tree(root, t)", "__return == tree_height(t) && tree(root, t)"))],
        imports=["/*@ Extern Coq (tree_height: tree -> Z) */"],
        typed=[
            "root : tree = [3, 9, 20, null, null, 15, 7]\noutput : Z = 3",
            "root : tree = [1, null, 2]\noutput : Z = 2",
        ],
    )

    # 53: "sum of the array" is refuted; a Kadane definition survives
    kadane = """
def kadane(best: Z, cur: Z, l: list Z): Z :=
  match l with
  | nil => best
  | x :: xs => kadane(Zmax(best, Zmax(cur + x, x)), Zmax(cur + x, x), xs)
  end.

def max_subarray(l: list Z): Z :=
  match l with
  | nil => 0
  | x :: xs => kadane(x, x, xs)
  end.
"""
    arr = "(l: list Z)", "int_array(nums, numsSize, l)"
    s["53"] = dict(
        outcome="Accepted",
        generate=[reply(spec(["sum: list Z -> Z"], SIG["53"], *arr, "__return == sum(l) && int_array(nums, numsSize, l)"))],
        semantic=[
            reply(
                spec(["max_subarray: list Z -> Z"], SIG["53"], *arr, "__return == max_subarray(l) && int_array(nums, numsSize, l)"),
                kadane,
            )
        ],
        typed=[
            "nums : list Z = [-2, 1, -3, 4, -1, 2, 1, -5, 4]\noutput : Z = 6",
            "nums : list Z = [1]\noutput : Z = 1",
            "nums : list Z = [5, 4, -1, 7, 8]\noutput : Z = 23",
        ],
    )

    # 58: every attempt miscounts; the semantic budget runs out
    st = "(l: list Z) (n: Z)", "char_array(s, n, l)"
    keep = " && char_array(s, n, l)"
    s["58"] = dict(
        outcome="Failed(Refuted)",
        generate=[reply(spec([], SIG["58"], *st, "__return == Zlength(l)" + keep))],
        semantic=[
            reply(spec([], SIG["58"], *st, "__return == Zlength(l) - 1" + keep)),
            reply(spec(["count_occ: Z -> list Z -> Z"], SIG["58"], *st, "__return == Zlength(l) - count_occ(32, l)" + keep)),
        ],
        typed=[
            's : string = "Hello World"\noutput : Z = 5',
            's : string = "   fly me   to   the moon  "\noutput : Z = 4',
            's : string = "luffy is still joyboy"\noutput : Z = 6',
        ],
    )

    # 70: user-defined recurrence, accepted directly
    stairs = """
def stairs_from(k: Z, a: Z, b: Z): Z :=
  if k <= 0 then a else stairs_from(k - 1, b, a + b).

def climb(n: Z): Z := stairs_from(n, 1, 1).
"""
    s["70"] = dict(
        outcome="Accepted",
        candidates=[reply(spec(["climb: Z -> Z"], SIG["70"], "", "1 <= n && n <= 45", "__return == climb(n)"), stairs)],
        typed=["n : Z = 2\noutput : Z = 2", "n : Z = 3\noutput : Z = 3"],
    )

    # 21: the model never produces a code block
    prose = "To merge two sorted lists, walk both lists and always take the smaller head."
    s["21"] = dict(outcome="Failed(GenerationParseFailure)", generate=[prose] * 4)

    # 198: broken definition syntax, repaired, then accepted
    rob_ok = """
def rob_from(prev: Z, cur: Z, l: list Z): Z :=
  match l with
  | nil => cur
  | x :: xs => rob_from(cur, Zmax(cur, prev + x), xs)
  end.

def rob_max(l: list Z): Z := rob_from(0, 0, l).
"""
    rob_bad = rob_ok.replace("end.", "end", 1)
    code198 = spec(["rob_max: list Z -> Z"], SIG["198"], *arr, "__return == rob_max(l) && int_array(nums, numsSize, l)")
    s["198"] = dict(
        outcome="Accepted",
        generate=[reply(code198, rob_bad)],
        syntax=[reply(code198, rob_ok)],
        typed=["nums : list Z = [1, 2, 3, 1]\noutput : Z = 4", "nums : list Z = [2, 7, 9, 3, 1]\noutput : Z = 12"],
    )

    # 230: in-order traversal, accepted directly
    s["230"] = dict(
        outcome="Accepted",
        candidates=[
            reply(
                spec(
                    ["nth: Z -> list Z -> Z -> Z", "inorder: tree -> list Z"],
                    SIG["230"],
                    "(t: tree)",
                    "tree(root, t) && 1 <= k",
                    "__return == nth(k - 1, inorder(t), 0) && tree(root, t)",
                )
            )
        ],
        typed=[
            "root : tree = [3, 1, 4, null, 2]\nk : Z = 1\noutput : Z = 1",
            "root : tree = [5, 3, 6, 2, 4, null, null, 1]\nk : Z = 3\noutput : Z = 3",
        ],
    )

    # 25: the Ensure keeps naming an unbound list; the syntax budget runs out
    bad25 = reply(spec(["rev: list Z -> list Z"], SIG["25"], "(l: list Z)", "sll(head, l) && 1 <= k", "sll(__return, rev(l2))"))
    s["25"] = dict(outcome="Failed(budget)", generate=[bad25], syntax=[bad25] * 5)

    # 41: "length + 1" is refuted; a search definition survives
    fm = """
def first_missing_from(i: Z, fuel: Z, l: list Z): Z :=
  if fuel <= 0 then i else if mem(i, l) == 1 then first_missing_from(i + 1, fuel - 1, l) else i.

def first_missing(l: list Z): Z := first_missing_from(1, Zlength(l) + 1, l).
"""
    s["41"] = dict(
        outcome="Accepted",
        generate=[reply(spec([], SIG["41"], *arr, "__return == Zlength(l) + 1 && int_array(nums, numsSize, l)"))],
        semantic=[
            reply(spec(["first_missing: list Z -> Z"], SIG["41"], *arr, "__return == first_missing(l) && int_array(nums, numsSize, l)"), fm)
        ],
        typed=[
            "nums : list Z = [1, 2, 0]\noutput : Z = 3",
            "nums : list Z = [3, 4, -1, 1]\noutput : Z = 2",
            "nums : list Z = [7, 8, 9, 11, 12]\noutput : Z = 1",
        ],
    )
    return s


def case_replies(problem, scenario) -> list:
    """Refutation-case answers: the typed example's let lines plus the result
    each refutation round's candidate claims."""
    from slspec.checker import parse_reply

    mapping = transform_signature(problem.signature)
    ces = [canonicalize(complete_lengths(parse_typed_response(t, mapping), mapping)) for t in scenario.get("typed", [])]
    rounds = []
    first = scenario.get("candidates") or scenario.get("syntax", scenario.get("generate"))[-1:]
    rounds.append(first[-1])
    rounds.extend(scenario.get("semantic", []))
    out = []
    for r in rounds:
        src = parse_annotated_source(parse_reply(r).text, mapping.signature.name)
        result = derive_result_term(src.funcspec)
        if result is None:
            raise SystemExit(f"{problem.id}: candidate names no result term")
        for ce in ces:
            out.append(f"{ce.bindings_text}\nlet result := {result} in\nlet expected := {ce.expected_text} in")
    return out


def script_for(problem, scenario) -> dict:
    script = {
        "generate": list(scenario.get("candidates") or scenario.get("generate", [])),
        "refine-syntax": list(scenario.get("syntax", [])),
        "refine-semantic": list(scenario.get("semantic", [])),
        "regen-imports": list(scenario.get("imports", [])),
        "type-example": list(scenario.get("typed", [])),
    }
    if scenario["outcome"] in ("Accepted", "Failed(Refuted)"):
        script["refutation-case"] = case_replies(problem, scenario)
    return script


def build(out_dir: Path) -> int:
    manifest = load_manifest(SAMPLES / "manifest.json")
    for p in manifest.problems:
        SIG[p.id] = p.signature
    plans = scenarios()
    merged = Cassette(metadata={"dataset": manifest.dataset, "model": "scripted"})
    expected, bad = {}, []
    with tempfile.TemporaryDirectory() as tmp:
        for p in manifest.problems:
            sc = plans[p.id]
            oracle = ScriptedBackend(script_for(p, sc))
            run = run_problem(p, PipelineConfig(), oracle, root=tmp)
            got = run.outcome()
            if got != sc["outcome"] or oracle.unused():
                bad.append(f"{p.id}: expected {sc['outcome']}, got {got}; unused {oracle.unused()}")
            merged.entries.update(oracle.cassette.entries)
            expected[p.id] = {"outcome": got, "oracle_calls": len(run.oracle_calls)}
    out_dir.mkdir(parents=True, exist_ok=True)
    merged.save(out_dir / "cassette.json")
    (out_dir / "expected_outcomes.json").write_text(json.dumps(expected, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    for line in bad:
        print("MISMATCH", line, file=sys.stderr)
    print(f"{len(merged.entries)} exchanges, {len(expected)} problems -> {out_dir}")
    return 1 if bad else 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=SAMPLES)
    return build(ap.parse_args(argv).out)


if __name__ == "__main__":
    sys.exit(main())
