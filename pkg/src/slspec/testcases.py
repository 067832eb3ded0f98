"""Typed examples, their canonical Coq form, and refutation cases.

Three stages turn a problem-statement example into a refutation case:

1. ``type_example`` asks the oracle to restate the example as typed values
   (``name : sort = literal`` lines) and validates the answer, re-asking with
   the parser error on failure.
2. ``canonicalize`` prints those values deterministically in Coq syntax.
3. ``build_refutation_case`` asks the oracle for the ``result``/``expected``
   terms, then runs the sanity checks on what came back.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from .annot.ast import Exists, Pred, Pure, Var, conjuncts, substitute_term
from .annot.parser import parse_coq_term
from .annot.render import render_coq_term
from .annot.signature import ShapeMapping
from .errors import (
    AnnotSyntaxError,
    OracleParseFailure,
    SanityCheckFailure,
    SlspecError,
    SortMismatch,
)
from .logic import funs
from .logic.values import EMPTY, CharList, Empty, Int, ListV, Node, coq_literal, list_items, values_equal
from .prompts import ModelParams, TemplateSet, refutation_case_prompt, type_example_prompt

DEFAULT_RETRIES = 3
FORBIDDEN_TOKENS = ("admit", "Parameter", "Axiom")
_FORBIDDEN_RE = re.compile(r"\b(" + "|".join(FORBIDDEN_TOKENS) + r")\b")


@dataclass(frozen=True)
class NLExample:
    input_text: str
    output_text: str
    explanation: str | None = None

    def __post_init__(self):
        if not self.input_text.strip() or not self.output_text.strip():
            raise ValueError("examples need non-empty input and output text")

    def render(self) -> str:
        out = f"Input: {self.input_text}\nOutput: {self.output_text}"
        if self.explanation:
            out += f"\nExplanation: {self.explanation}"
        return out


@dataclass(frozen=True)
class TypedExample:
    inputs: tuple  # ((name, sort, value), ...) in signature order
    output: tuple  # (sort, value)

    def value_of(self, name: str):
        for n, _, v in self.inputs:
            if n == name:
                return v
        raise KeyError(name)

    def equivalent(self, other: "TypedExample") -> bool:
        if [(n, s) for n, s, _ in self.inputs] != [(n, s) for n, s, _ in other.inputs]:
            return False
        same_inputs = all(values_equal(a[2], b[2]) for a, b in zip(self.inputs, other.inputs))
        return same_inputs and self.output[0] == other.output[0] and values_equal(self.output[1], other.output[1])


@dataclass(frozen=True)
class CanonicalExample:
    bindings_text: str
    expected_text: str


@dataclass(frozen=True)
class Violation:
    kind: str  # "missing-binding" | "forbidden-token"
    detail: str


@dataclass(frozen=True)
class RefutationCase:
    case_id: str
    bindings: tuple  # ((name, coq term text), ...)
    result_term: str
    expected_term: str

    @property
    def goal(self) -> str:
        return "result <> expected"

    def binding(self, name: str) -> str | None:
        for n, t in self.bindings:
            if n == name:
                return t
        return None

    def to_dict(self) -> dict:
        return {
            "case_id": self.case_id,
            "bindings": [{"name": n, "term": t} for n, t in self.bindings],
            "result_term": self.result_term,
            "expected_term": self.expected_term,
            "goal": self.goal,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RefutationCase":
        return cls(
            str(d["case_id"]),
            tuple((b["name"], b["term"]) for b in d["bindings"]),
            d["result_term"],
            d["expected_term"],
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


# -- literal parsing ---------------------------------------------------------

SORT_ALIASES = {
    "Z": "Z",
    "int": "Z",
    "integer": "Z",
    "long": "Z",
    "bool": "bool",
    "boolean": "bool",
    "list Z": "list Z",
    "list int": "list Z",
    "int[]": "list Z",
    "array": "list Z",
    "string": "string",
    "str": "string",
    "char*": "string",
    "tree": "tree",
}


def canonical_sort(text: str) -> str | None:
    return SORT_ALIASES.get(" ".join(text.split()))


def tree_from_level_order(items) -> Empty | Node:
    """LeetCode level-order list (``null`` for gaps) to a logical tree."""
    if not items or items[0] is None:
        return EMPTY
    vals = list(items)
    for v in vals:
        if v is not None and (isinstance(v, bool) or not isinstance(v, int)):
            raise ValueError(f"tree values must be integers, got {v!r}")
    # build mutable nodes first, freeze afterwards
    nodes = [[None, vals[0], None]]
    queue = [nodes[0]]
    i = 1
    while queue and i < len(vals):
        cur = queue.pop(0)
        for side in (0, 2):
            if i >= len(vals):
                break
            if vals[i] is not None:
                child = [None, vals[i], None]
                cur[side] = child
                queue.append(child)
            i += 1

    def freeze(n):
        if n is None:
            return EMPTY
        return Node(freeze(n[0]), Int(n[1]), freeze(n[2]))

    return freeze(nodes[0])


def tree_to_level_order(t) -> list:
    out, queue = [], [t]
    while queue:
        n = queue.pop(0)
        if isinstance(n, Node):
            out.append(n.val.value if isinstance(n.val, Int) else n.val)
            queue.append(n.left)
            queue.append(n.right)
        else:
            out.append(None)
    while out and out[-1] is None:
        out.pop()
    return out


_NODE_RE = re.compile(r"\s*(node|empty|null)\b")


def _parse_node_literal(text: str):
    pos = 0

    def skip():
        nonlocal pos
        while pos < len(text) and text[pos].isspace():
            pos += 1

    def parse():
        nonlocal pos
        skip()
        m = _NODE_RE.match(text, pos)
        if not m:
            raise ValueError(f"expected node(...) or empty at offset {pos}")
        pos = m.end()
        if m.group(1) in ("empty", "null"):
            return EMPTY
        skip()
        expect("(")
        left = parse()
        expect(",")
        skip()
        m2 = re.compile(r"-?\d+").match(text, pos)
        if not m2:
            raise ValueError(f"expected an integer at offset {pos}")
        pos = m2.end()
        expect(",")
        right = parse()
        expect(")")
        return Node(left, Int(int(m2.group())), right)

    def expect(ch):
        nonlocal pos
        skip()
        if pos >= len(text) or text[pos] != ch:
            raise ValueError(f"expected {ch!r} at offset {pos}")
        pos += 1

    v = parse()
    skip()
    if pos != len(text):
        raise ValueError(f"unexpected text after tree literal: {text[pos:]!r}")
    return v


def parse_literal(text: str, sort: str):
    """Parse a typed-example literal of the given sort into a LogicValue."""
    text = text.strip()
    if sort == "tree" and _NODE_RE.match(text) and not text.startswith("null,"):
        return _parse_node_literal(text)
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as err:
        raise ValueError(f"cannot read literal {text!r}: {err.msg}") from None
    return convert_json(raw, sort)


def convert_json(raw, sort: str):
    if sort in ("Z", "bool"):
        if isinstance(raw, bool):
            return Int(int(raw))
        if isinstance(raw, int):
            if sort == "bool" and raw not in (0, 1):
                raise ValueError(f"boolean value must be 0 or 1, got {raw}")
            return Int(raw)
        raise SortMismatch("value", sort, type(raw).__name__)
    if sort == "list Z":
        if isinstance(raw, list) and all(isinstance(x, int) and not isinstance(x, bool) for x in raw):
            return ListV(tuple(Int(x) for x in raw))
        raise SortMismatch("value", sort, type(raw).__name__)
    if sort == "string":
        if isinstance(raw, str):
            return CharList.from_str(raw)
        raise SortMismatch("value", sort, type(raw).__name__)
    if sort == "tree":
        if raw is None:
            return EMPTY
        if isinstance(raw, list):
            return tree_from_level_order(raw)
        raise SortMismatch("value", sort, type(raw).__name__)
    raise ValueError(f"unsupported sort {sort!r}")


def value_has_sort(v, sort: str) -> bool:
    if sort == "Z":
        return isinstance(v, Int)
    if sort == "bool":
        return isinstance(v, Int) and v.value in (0, 1)
    if sort == "list Z":
        return isinstance(v, ListV) and all(isinstance(x, Int) for x in v.items)
    if sort == "string":
        return isinstance(v, CharList)
    if sort == "tree":
        return isinstance(v, (Empty, Node))
    return False


# -- stage 1: typing ---------------------------------------------------------

_LINE_RE = re.compile(r"^\s*([A-Za-z_]\w*)\s*:\s*([^=]+?)\s*=\s*(.+?)\s*$")


def parse_typed_response(text: str, mapping: ShapeMapping) -> TypedExample:
    """Read ``name : sort = literal`` lines; length parameters may be omitted."""
    found = {}
    for line in text.splitlines():
        m = _LINE_RE.match(line.strip().strip("`"))
        if m:
            found.setdefault(m.group(1), (m.group(2), m.group(3)))
    inputs = []
    for p in mapping.params:
        if p.shape in ("length", "out-size"):
            continue
        if p.name not in found:
            raise ValueError(f"no typed value for parameter {p.name!r}")
        sort_text, lit = found[p.name]
        got = canonical_sort(sort_text)
        if got != p.sort:
            raise SortMismatch(p.name, p.sort, sort_text.strip())
        v = _convert_named(p.name, lit, p.sort)
        inputs.append((p.name, p.sort, v))
    if "output" not in found:
        raise ValueError("no typed value for the output")
    want = mapping.result.sort
    sort_text, lit = found["output"]
    if canonical_sort(sort_text) != want:
        raise SortMismatch("output", want, sort_text.strip())
    out = _convert_named("output", lit, want)
    return complete_lengths(TypedExample(tuple(inputs), (want, out)), mapping)


def _convert_named(name, lit, sort):
    try:
        return parse_literal(lit, sort)
    except SortMismatch as err:
        raise SortMismatch(name, err.expected, err.found) from None


def complete_lengths(te: TypedExample, mapping: ShapeMapping) -> TypedExample:
    """Insert derived length parameters so inputs follow the signature."""
    given = {n: (s, v) for n, s, v in te.inputs}
    out = []
    for p in mapping.params:
        if p.shape == "out-size":
            continue
        if p.shape == "length":
            if p.name in given:
                out.append((p.name, "Z", given[p.name][1]))
            else:
                arr = given[p.length_of][1]
                out.append((p.name, "Z", Int(len(list_items(arr)))))
        else:
            s, v = given[p.name]
            out.append((p.name, s, v))
    return TypedExample(tuple(out), te.output)


def sorts_summary(mapping: ShapeMapping) -> str:
    parts = [f"{p.name}: {p.sort}" for p in mapping.inputs]
    parts.append(f"output: {mapping.result.sort}")
    return ", ".join(parts)


def _ask(stage, make_prompt, parse, oracle, retries):
    error = None
    last = None
    for attempt in range(retries + 1):
        text = oracle.complete(make_prompt(error))
        try:
            return parse(text), text
        except SanityCheckFailure:
            raise
        except (ValueError, SlspecError) as err:
            last = err
            error = str(err)
    if isinstance(last, SortMismatch):
        raise last
    raise OracleParseFailure(stage, retries + 1, str(last))


def type_example(
    ex: NLExample,
    mapping: ShapeMapping,
    oracle,
    retries: int = DEFAULT_RETRIES,
    templates: TemplateSet = TemplateSet(),
    params: ModelParams = ModelParams(),
) -> TypedExample:
    sig_text = mapping.signature.render()
    te, _ = _ask(
        "type-example",
        lambda err: type_example_prompt(ex.render(), sig_text, sorts_summary(mapping), templates, params, err),
        lambda text: parse_typed_response(text, mapping),
        oracle,
        retries,
    )
    return te


# -- stage 2: canonical form -------------------------------------------------


def canonicalize(te: TypedExample) -> CanonicalExample:
    lines = [f"let {name} := {coq_literal(v)} in" for name, _, v in te.inputs]
    return CanonicalExample("\n".join(lines), coq_literal(te.output[1], top=False))


_LET_RE = re.compile(r"^\s*let\s+([A-Za-z_]\w*)\s*:=\s*(.*?)\s+in\s*$")


def parse_bindings(text: str) -> list:
    out = []
    for line in text.splitlines():
        if not line.strip():
            continue
        m = _LET_RE.match(line)
        if not m:
            raise ValueError(f"not a let binding: {line.strip()!r}")
        out.append((m.group(1), m.group(2)))
    return out


def value_for_sort(v, sort: str):
    if sort == "string" and isinstance(v, ListV):
        return CharList(tuple(x.value for x in v.items))
    return v


def eval_literal(text: str, sort: str | None = None):
    v = funs.eval_term(parse_coq_term(text), {}, funs.prelude())
    return value_for_sort(v, sort) if sort else v


def parse_canonical(ce: CanonicalExample, te_sorts: TypedExample | ShapeMapping) -> TypedExample:
    """Inverse of ``canonicalize``; sorts come from a template example or a
    signature mapping."""
    if isinstance(te_sorts, ShapeMapping):
        sorts = {p.name: p.sort for p in te_sorts.params}
        out_sort = te_sorts.result.sort
    else:
        sorts = {n: s for n, s, _ in te_sorts.inputs}
        out_sort = te_sorts.output[0]
    inputs = tuple((n, sorts[n], eval_literal(t, sorts[n])) for n, t in parse_bindings(ce.bindings_text))
    return TypedExample(inputs, (out_sort, eval_literal(ce.expected_text, out_sort)))


# -- stage 3: refutation cases -------------------------------------------------


def sanity_check(rc: RefutationCase, mapping_or_names) -> list:
    """Every violation; an empty list means the case passes."""
    if isinstance(mapping_or_names, ShapeMapping):
        names = [p.name for p in mapping_or_names.params if p.shape != "out-size"]
    elif hasattr(mapping_or_names, "param_names"):
        names = list(mapping_or_names.param_names)
    else:
        names = list(mapping_or_names)
    bound = {n for n, _ in rc.bindings}
    out = [Violation("missing-binding", n) for n in names if n not in bound]
    texts = [t for _, t in rc.bindings] + [rc.result_term, rc.expected_term]
    texts += [n for n, _ in rc.bindings]
    for t in texts:
        for m in _FORBIDDEN_RE.finditer(t):
            out.append(Violation("forbidden-token", m.group()))
    return out


def forbidden_tokens(text: str) -> list:
    return [m.group() for m in _FORBIDDEN_RE.finditer(text)]


def parse_case_response(text: str) -> tuple:
    """(bindings, result term, expected term) from ``let`` lines in a reply."""
    bindings, result, expected = [], None, None
    for line in text.splitlines():
        m = _LET_RE.match(line.strip().strip("`"))
        if not m:
            continue
        name, term = m.group(1), m.group(2)
        if name == "result":
            result = term
        elif name == "expected":
            expected = term
        else:
            bindings.append((name, term))
    if result is None:
        raise ValueError("reply has no 'let result := ... in' line")
    if expected is None:
        raise ValueError("reply has no 'let expected := ... in' line")
    for _, t in bindings + [("result", result), ("expected", expected)]:
        try:
            parse_coq_term(t)
        except AnnotSyntaxError as err:
            raise ValueError(f"cannot parse term {t!r}: {err}") from None
    return bindings, result, expected


def _validated_case(text, ce, te, mapping, case_id):
    hits = forbidden_tokens(text)
    if hits:
        raise SanityCheckFailure([Violation("forbidden-token", h) for h in hits])
    bindings, result, expected = parse_case_response(text)
    order = [p.name for p in mapping.params if p.shape != "out-size"]
    got = dict(bindings)
    canon = dict(parse_bindings(ce.bindings_text))
    rc = RefutationCase(case_id, tuple(bindings), result, expected)
    violations = sanity_check(rc, order)
    if violations:
        raise SanityCheckFailure(violations)
    for name in order:
        if not values_equal(eval_literal(got[name]), eval_literal(canon[name])):
            raise ValueError(f"binding for {name!r} does not match the typed example ({canon[name]})")
    if not values_equal(eval_literal(expected), eval_literal(ce.expected_text)):
        raise ValueError(f"expected value does not match the typed example ({ce.expected_text})")
    # canonical spellings, signature order
    return RefutationCase(case_id, tuple((n, canon[n]) for n in order), result, ce.expected_text)


def build_refutation_case(
    ce: CanonicalExample,
    te: TypedExample,
    problem,
    candidate_text: str,
    mapping: ShapeMapping,
    oracle,
    case_id: str,
    retries: int = DEFAULT_RETRIES,
    templates: TemplateSet = TemplateSet(),
    params: ModelParams = ModelParams(),
) -> RefutationCase:
    """Ask the oracle for ``result``/``expected`` terms for one example."""
    rc, _ = _ask(
        "refutation-case",
        lambda err: refutation_case_prompt(
            problem.title, problem.description, candidate_text, ce.bindings_text, ce.expected_text, templates, params, err
        ),
        lambda text: _validated_case(text, ce, te, mapping, case_id),
        oracle,
        retries,
    )
    return rc


# -- deterministic result terms -------------------------------------------------


def with_var_carriers(spec) -> dict:
    """Map With-variables to the program parameter whose shape holds them,
    read off ``sll(p, l)`` / ``tree(p, t)`` / ``*_array(p, n, l)`` in Require."""
    out = {}
    withs = {n for n, _ in spec.with_params}
    for c in conjuncts(spec.require):
        match c:
            case Pred(name="sll" | "tree", args=(Var(name=p), Var(name=v))) if v in withs:
                out.setdefault(v, p)
            case Pred(name="int_array" | "char_array", args=(Var(name=p), _, Var(name=v))) if v in withs:
                out.setdefault(v, p)
            case Pure(op="==", lhs=Var(name=v), rhs=Var(name=p)) if v in withs and p not in withs:
                out.setdefault(v, p)
            case Pure(op="==", lhs=Var(name=p), rhs=Var(name=v)) if v in withs and p not in withs:
                out.setdefault(v, p)
    return out


def claimed_result(spec):
    """The term an Ensure clause equates with the return value, if any.

    Existential witnesses pinned by an equation (``exists r, r == f(x) &&
    tree(__return, r)``) are replaced by the term they equal."""
    t = _claimed(spec.ensure)
    bound = _exists_equations(spec.ensure)
    for _ in range(len(bound)):
        if not isinstance(t, Var) or t.name not in bound:
            break
        t = bound[t.name]
    if isinstance(t, Var) and t.name in _exists_vars(spec.ensure):
        return None
    return t


def _exists_vars(a) -> set:
    out = set()
    while isinstance(a, Exists):
        out.update(a.vars)
        a = a.body
    return out


def _exists_equations(a) -> dict:
    names = _exists_vars(a)
    out = {}
    for c in conjuncts(_strip_exists(a)):
        match c:
            case Pure(op="==", lhs=Var(name=v), rhs=t) if v in names:
                out.setdefault(v, t)
            case Pure(op="==", lhs=t, rhs=Var(name=v)) if v in names and v != "__return":
                out.setdefault(v, t)
    return out


def _strip_exists(a):
    while isinstance(a, Exists):
        a = a.body
    return a


def _claimed(ensure):
    for c in conjuncts(_strip_exists(ensure)):
        match c:
            case Pred(name="sll" | "tree", args=(Var(name="__return"), t)):
                return t
            case Pred(name="int_array" | "char_array", args=(Var(name="__return"), _, t)):
                return t
            case Pure(op="==", lhs=Var(name="__return"), rhs=t):
                return t
            case Pure(op="==", lhs=t, rhs=Var(name="__return")):
                return t
    return None


def derive_result_term(spec) -> str | None:
    """Coq text of the claimed result over program parameters, e.g.
    ``tree_insert (val + 1) tr`` for ``tree(__return, tree_insert(val + 1, t))``."""
    t = claimed_result(spec)
    if t is None:
        return None
    carriers = with_var_carriers(spec)
    t = substitute_term(t, {v: Var(p) for v, p in carriers.items()})
    return render_coq_term(t)


def derive_refutation_case(ce: CanonicalExample, spec, mapping: ShapeMapping, case_id: str) -> RefutationCase | None:
    result = derive_result_term(spec)
    if result is None:
        return None
    order = [p.name for p in mapping.params if p.shape != "out-size"]
    canon = dict(parse_bindings(ce.bindings_text))
    return RefutationCase(case_id, tuple((n, canon[n]) for n in order if n in canon), result, ce.expected_text)
