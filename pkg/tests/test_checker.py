import sys

import pytest

from conftest import BST_GOOD, FIXTURES
from slspec.checker import BuiltinChecker, Candidate, ExternalChecker, check_candidate, check_defs, parse_reply
from slspec.diagnostics import ErrorCategory, categorize

REVERSE_SRC = (FIXTURES / "reverse_annotated.c").read_text()


def cats(text, defs=""):
    return [categorize(d) for d in check_candidate(Candidate(text, defs)).diagnostics]


def test_parse_reply():
    cand = parse_reply("Here you go:\n```c\nint f(int x)\n/*@ Require emp Ensure __return == x */\n;\n```\n```defs\ndef g(x: Z): Z := x.\n```\n")
    assert cand.text.startswith("int f") and cand.defs_text.startswith("def g")
    with pytest.raises(ValueError):
        parse_reply("no code here")
    with pytest.raises(ValueError):
        parse_reply("```c\njust words\n```")


def test_reverse_example_checks():
    res = check_candidate(Candidate(REVERSE_SRC))
    assert res.ok and res.source.signature.name == "reverse"
    assert "rev" in res.table


def test_expected_signature_mismatch():
    from slspec.annot.signature import parse_signature_text

    res = check_candidate(Candidate(REVERSE_SRC), parse_signature_text("int reverse(struct list* p)"))
    assert [categorize(d) for d in res.diagnostics] == [ErrorCategory.UNRECOVERABLE]


def test_defs_messages():
    diags, _, _ = check_defs("def f(x: Z): Z := x +.")
    assert diags[0].raw_text.startswith('File "defs", line 1, characters')
    diags, _, _ = check_defs("def app(x: Z): Z := x.")
    assert diags[0].raw_text == "Error: app already exists."
    diags, _, _ = check_defs("def f(x: Z): Z := g(x).")
    assert "The reference g was not found" in diags[0].raw_text
    diags, _, _ = check_defs("def f(x: Z): list Z := x.")
    assert 'has type "Z" while it is expected to have type "list Z"' in diags[0].raw_text


def test_user_defs_may_use_library_and_shadow_it():
    defs = "def has(v: Z, l: list Z): Z := mem(v, l).\n\ndef rev(l: list Z): list Z := l."
    diags, table, user = check_defs(defs)
    assert not diags and {d.name for d in user} == {"has", "rev"}
    from slspec.annot.parser import parse_term
    from slspec.logic.funs import eval_term
    from slspec.logic.values import mk_list

    assert eval_term(parse_term("rev(l)"), {"l": mk_list([1, 2])}, table) == mk_list([1, 2])


def test_user_defined_functions_are_imported_like_library_ones():
    defs = "def myrev(l: list Z): list Z := l."
    bare = REVERSE_SRC.replace("/*@ Extern Coq (rev: list Z -> list Z) */\n", "").replace("rev(l)) */", "myrev(l)) */")
    assert cats(bare, defs) == [ErrorCategory.PREDICATE_IMPORT]
    declared = REVERSE_SRC.replace("(rev: list Z -> list Z)", "(myrev: list Z -> list Z)").replace("rev(l)) */", "myrev(l)) */")
    assert cats(declared, defs) == []


def test_prelude_needs_no_extern():
    text = REVERSE_SRC.replace("rev(l)) */", "app(l, l)) */").replace("/*@ Extern Coq (rev: list Z -> list Z) */\n", "")
    assert cats(text) == []


def test_preamble_includes_library_sources():
    res = check_candidate(Candidate(REVERSE_SRC))
    pre = res.preamble("def extra(x: Z): Z := x.")
    assert pre.startswith("def rev(l: list Z): list Z :=") and pre.rstrip().endswith("def extra(x: Z): Z := x.")


def test_external_checker(tmp_path):
    script = tmp_path / "chk.py"
    script.write_text("import sys\nprint('Error: The reference zz was not found in the current environment.')\nsys.exit(1)\n")
    res = ExternalChecker(f"{sys.executable} {script} {{file}} {{defs}}").check(Candidate(REVERSE_SRC))
    assert [categorize(d) for d in res.diagnostics] == [ErrorCategory.COQ_UNRESOLVED_IDENT]
    ok = ExternalChecker(f"{sys.executable} -c pass").check(Candidate(REVERSE_SRC))
    assert ok.ok and ok.source is not None
    slow = ExternalChecker(f"{sys.executable} -c 'import time; time.sleep(3)'", timeout=0.3).check(Candidate(REVERSE_SRC))
    assert "timed out" in slow.diagnostics[0].raw_text


def test_builtin_checker_is_the_default():
    assert BuiltinChecker().check(Candidate(parse_reply(BST_GOOD).text)).ok
