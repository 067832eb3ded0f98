import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slspec.diagnostics import (
    Diagnostic,
    ErrorCategory,
    RuleTable,
    categorize,
    default_rules,
    is_recoverable,
    select_hints,
    worst_category,
)
from slspec.errors import UnknownCategory

C = ErrorCategory

SAMPLES = [
    ("annotation-checker", "annotation syntax error at line 2, column 5: expected '==' but found '='", C.ANNOT_LANG_CONFUSION),
    ("annotation-checker", "annotation syntax error at line 1, column 9: expected '&&' but found '/\\'", C.ANNOT_LANG_CONFUSION),
    ("annotation-checker", "unresolved logical function 'rev': missing Extern Coq declaration", C.PREDICATE_IMPORT),
    ("annotation-checker", "predicate instantiation error in Require: sll expects 2 arguments", C.ANNOT_BAD_PREDICATE_INSTANTIATION),
    ("annotation-checker", "unbound logical variable 'm' in Ensure", C.ANNOT_MALFORMED_CLAUSE),
    ("annotation-checker", "malformed function specification: no With/Require/Ensure annotation for 'f'", C.ANNOT_MALFORMED_CLAUSE),
    ("coq-checker", "Error: The reference frob was not found in the current environment.", C.COQ_UNRESOLVED_IDENT),
    ("coq-checker", "Error: app already exists.", C.COQ_UNRESOLVED_IDENT),
    ("coq-checker", 'Error: In f: The term "x" has type "Z" while it is expected to have type "list Z".', C.COQ_TYPE),
    ("coq-checker", "Illegal application: rev expects 1 argument", C.COQ_TYPE),
    ("coq-checker", 'File "defs", line 1, characters 4-5: Syntax error: expected term', C.COQ_SYNTAX),
    ("annotation-checker", "signature mismatch: expected int f(int x)", C.UNRECOVERABLE),
    ("coq-checker", "Anomaly: uncaught exception", C.UNRECOVERABLE),
]


@pytest.mark.parametrize("source,text,want", SAMPLES)
def test_categorize(source, text, want):
    assert categorize(Diagnostic(source, text)) is want


def test_first_rule_wins():
    # an annotation syntax error that is also a confusion goes to the more specific rule
    text = "annotation syntax error at line 1, column 1: expected '||' but found '\\/'"
    assert categorize(Diagnostic("annotation-checker", text)) is C.ANNOT_LANG_CONFUSION


@settings(max_examples=500, deadline=None)
@given(st.one_of(st.text(max_size=200), st.binary(max_size=200)), st.sampled_from(["annotation-checker", "coq-checker", "other"]))
def test_categorize_is_total(raw, source):
    assert isinstance(categorize(Diagnostic(source, raw)), ErrorCategory)


def test_hints():
    hints = select_hints(C.ANNOT_LANG_CONFUSION, 2)
    assert [h.pattern_id for h in hints] == ["ALC-01", "ALC-02"]
    assert all(h.example_before != h.example_after for h in hints)
    assert select_hints(C.UNRECOVERABLE, 5) == []
    assert select_hints(C.COQ_TYPE, 0) == []
    for cat in C:
        if cat is not C.UNRECOVERABLE:
            assert select_hints(cat, 1), cat


def test_recoverability():
    assert not is_recoverable(C.UNRECOVERABLE)
    assert is_recoverable(C.COQ_SYNTAX)
    assert worst_category([C.COQ_TYPE, C.UNRECOVERABLE]) is C.UNRECOVERABLE
    assert worst_category([C.COQ_TYPE, C.COQ_SYNTAX]) is C.COQ_TYPE
    assert worst_category([]) is None


def test_taxonomy_file_is_editable(tmp_path):
    doc = json.loads(json.dumps(_shipped()))
    doc["rules"].insert(0, {"id": "X1", "category": "CoqSyntax", "pattern": "^Anomaly"})
    path = tmp_path / "tax.json"
    path.write_text(json.dumps(doc))
    rules = RuleTable.load(path)
    assert categorize(Diagnostic("coq-checker", "Anomaly: boom"), rules) is C.COQ_SYNTAX


def test_taxonomy_validation(tmp_path):
    doc = _shipped()
    doc["hints"] = [h for h in doc["hints"] if h["category"] != "CoqType"]
    with pytest.raises(UnknownCategory):
        RuleTable.from_dict(doc)
    doc = _shipped()
    doc["rules"][0]["category"] = "Mystery"
    with pytest.raises(UnknownCategory):
        RuleTable.from_dict(doc)
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(UnknownCategory):
        RuleTable.load(bad)


def test_diagnostic_round_trip():
    d = Diagnostic("coq-checker", "Error: x", (3, 4))
    assert Diagnostic.from_dict(d.to_dict()) == d


def test_rule_sources_are_respected():
    rules = default_rules()
    doc = _shipped()
    doc["rules"] = [dict(r, source="coq-checker") for r in doc["rules"]]
    scoped = RuleTable.from_dict(doc)
    text = "unbound logical variable 'm' in Ensure"
    assert categorize(Diagnostic("annotation-checker", text), rules) is C.ANNOT_MALFORMED_CLAUSE
    assert categorize(Diagnostic("annotation-checker", text), scoped) is C.UNRECOVERABLE


def _shipped() -> dict:
    from importlib import resources

    return json.loads(resources.files("slspec").joinpath("data", "taxonomy.json").read_text())
