"""Counterexample-guided refutation of candidate specifications.

A refutation case fixes concrete inputs and the expected output of one
problem-statement example.  The postcondition is instantiated on that pair
and the builtin decider checks whether it can hold:

* the inputs are laid out as canonical heaps, and the ``With`` variables are
  recovered by solving ``Require`` on that input heap;
* the post-state holds the expected output laid out at ``__return`` plus
  every input structure the ``Ensure`` clause still talks about spatially;
* ``Ensure`` unsatisfiable on the post-state means the example refutes the
  specification; satisfiable means this example is consistent with it.

Goal files for an external prover use the ``Example``/``result <> expected``
shape and are printed byte-deterministically by ``emit_coq_goal``.
"""

from __future__ import annotations

import enum
import os
import shlex
import subprocess
import tempfile
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .annot.ast import (
    DataAt,
    Exists,
    Lit,
    Pred,
    Store,
    Var,
    assertion_terms,
    conjuncts,
    substitute,
    term_vars,
)
from .annot.parser import parse_coq_term
from .annot.render import render_assertion
from .annot.signature import ShapeMapping
from .errors import (
    BackendIOFailure,
    EvalError,
    FuelExhausted,
    SanityCheckFailure,
    SortError,
    UnboundSpecVariable,
    UnboundVar,
)
from .logic import funs
from .logic.canonical import layout
from .logic.heap import HeapState
from .logic.satisfy import Sat, SearchConfig, Unsat, check, solve
from .logic.values import show, values_equal
from .testcases import RefutationCase, claimed_result, sanity_check, value_for_sort


class Status(str, enum.Enum):
    REFUTED = "Refuted"
    NOT_REFUTED = "NotRefuted"
    UNKNOWN = "Unknown"

    def __str__(self):
        return self.value


Refuted, NotRefuted, Unknown = Status.REFUTED, Status.NOT_REFUTED, Status.UNKNOWN


@dataclass(frozen=True)
class Negation:
    """``not body``: the claim a refutation has to establish."""

    body: object

    def render(self) -> str:
        return f"~({render_assertion(self.body)})"


@dataclass(frozen=True)
class RefutationGoal:
    case: RefutationCase
    negated_post: Negation | None  # instantiated with the first precondition model
    origin_spec: object
    mapping: ShapeMapping
    inputs: dict  # parameter -> value
    expected: object
    input_heap: HeapState
    input_env: dict
    post_heap: HeapState
    return_value: object
    models: tuple = ()  # With-variable assignments satisfying Require
    precondition: str = "satisfied"  # satisfied | unsatisfiable | undetermined
    retained: tuple = ()

    def post_env(self, model: dict) -> dict:
        env = dict(self.input_env)
        env.update(model)
        if self.mapping.result.shape != "void":
            env["__return"] = self.return_value
        return env


@dataclass(frozen=True)
class CaseVerdict:
    case_id: str
    status: Status
    kind: str  # postcondition-violated | precondition-unsatisfiable | consistent | undetermined | ...
    report: str

    def to_dict(self) -> dict:
        return {"case_id": self.case_id, "status": str(self.status), "kind": self.kind, "report": self.report}

    @classmethod
    def from_dict(cls, d) -> "CaseVerdict":
        return cls(d["case_id"], Status(d["status"]), d["kind"], d["report"])


@dataclass(frozen=True)
class Verdict:
    status: Status
    cases: tuple = ()
    reason: str = ""

    @property
    def witness(self) -> CaseVerdict | None:
        for c in self.cases:
            if c.status is Refuted:
                return c
        return None

    def to_dict(self) -> dict:
        w = self.witness
        return {
            "status": str(self.status),
            "reason": self.reason,
            "witness": w.case_id if w else None,
            "cases": [c.to_dict() for c in self.cases],
        }

    @classmethod
    def from_dict(cls, d) -> "Verdict":
        return cls(Status(d["status"]), tuple(CaseVerdict.from_dict(c) for c in d["cases"]), d.get("reason", ""))


# -- backends ---------------------------------------------------------------------


@dataclass(frozen=True)
class Builtin:
    name: str = "builtin"


@dataclass(frozen=True)
class ExternalCommand:
    """Run ``template`` (``{file}``, ``{timeout}``, ``{preamble}`` slots).

    Exit status 0 means the negated goal was discharged (refuted), 1 means it
    was not, anything else or a timeout leaves the case undecided.
    """

    template: str
    timeout: float = 60.0
    confirm: bool = False  # also run when the builtin decided
    max_concurrent: int = 2
    name: str = "external"

    @classmethod
    def from_env(cls, default: str | None = None, **kw) -> "ExternalCommand | None":
        cmd = os.environ.get("SLSPEC_PROVER_CMD", default)
        return cls(cmd, **kw) if cmd else None


_SEMAPHORES: dict = {}
_SEM_LOCK = threading.Lock()


def _semaphore(backend: ExternalCommand):
    with _SEM_LOCK:
        key = (backend.template, backend.max_concurrent)
        if key not in _SEMAPHORES:
            _SEMAPHORES[key] = threading.BoundedSemaphore(max(1, backend.max_concurrent))
        return _SEMAPHORES[key]


# -- instantiation ----------------------------------------------------------------


def _spatial_vars(a) -> set:
    out = set()
    for c in _atoms(a):
        if isinstance(c, (Pred, Store, DataAt)):
            for t in assertion_terms(c):
                out |= term_vars(t)
    return out


def _atoms(a):
    from .annot.ast import Disj, PureConj, SepConj

    match a:
        case SepConj(lhs=l, rhs=r) | PureConj(lhs=l, rhs=r) | Disj(lhs=l, rhs=r):
            yield from _atoms(l)
            yield from _atoms(r)
        case Exists(body=b):
            yield from _atoms(b)
        case _:
            yield a


def case_values(rc: RefutationCase, mapping: ShapeMapping, defs=None):
    """Evaluate a case's bindings and expected term to LogicValues."""
    table = funs.library() if defs is None else defs
    sorts = {p.name: p.sort for p in mapping.params}
    inputs = {}
    env = {}
    for name, text in rc.bindings:
        v = funs.eval_term(parse_coq_term(text), env, table)
        v = value_for_sort(v, sorts.get(name, ""))
        inputs[name] = v
        env[name] = v
    expected = value_for_sort(funs.eval_term(parse_coq_term(rc.expected_term), env, table), mapping.result.sort)
    return inputs, expected


def negate_postcondition(
    spec,
    case: RefutationCase,
    mapping: ShapeMapping,
    defs=None,
    cfg: SearchConfig | None = None,
) -> RefutationGoal:
    """Instantiate ``spec`` on one case and negate its postcondition."""
    violations = sanity_check(case, mapping)
    if violations:
        raise SanityCheckFailure(violations)
    cfg = cfg or SearchConfig(defs=defs)
    inputs, expected = case_values(case, mapping, defs)

    cells, env, nxt = {}, {}, 1
    for p in mapping.params:
        if p.shape == "out-size":
            continue
        v = inputs[p.name]
        if p.is_pointer:
            c, root, nxt = layout(v, p.shape, nxt)
            cells.update(c)
            env[p.name] = root
        else:
            env[p.name] = v
    input_heap = HeapState(cells)

    with_vars = [n for n, _ in spec.with_params]
    models = solve(with_vars, spec.require, input_heap, env, cfg)
    if models.unbounded:
        raise UnboundSpecVariable(models.unbounded[0])
    if models.envs:
        pre = "satisfied"
    else:
        pre = "unsatisfiable" if models.complete else "undetermined"

    retained = sorted(
        p.name for p in mapping.params if p.is_pointer and p.name in _spatial_vars(spec.ensure)
    )
    post_cells = {}
    for p in mapping.params:
        if p.name in retained:
            c, _, _ = layout(inputs[p.name], p.shape, _first_id(mapping, inputs, p.name))
            post_cells.update(c)
    ret = None
    if mapping.result.shape != "void":
        c, ret, _ = layout(expected, "scalar" if mapping.result.shape == "scalar" else mapping.result.shape, nxt)
        post_cells.update(c)
    post_heap = HeapState(post_cells)

    goal = RefutationGoal(
        case, None, spec, mapping, inputs, expected, input_heap, env, post_heap, ret,
        tuple({k: m[k] for k in with_vars} for m in models.envs), pre, tuple(retained),
    )
    if goal.models:
        inst = {k: Lit(v) for k, v in goal.post_env(goal.models[0]).items()}
        goal = _replace(goal, negated_post=Negation(substitute(spec.ensure, inst)))
    return goal


def _replace(goal, **kw):
    from dataclasses import replace

    return replace(goal, **kw)


def _first_id(mapping, inputs, name) -> int:
    """Node id a parameter's structure starts at in the input layout."""
    nxt = 1
    for p in mapping.params:
        if p.shape == "out-size":
            continue
        if p.name == name:
            return nxt
        if p.is_pointer:
            _, _, nxt = layout(inputs[p.name], p.shape, nxt)
    return nxt


# -- decision -----------------------------------------------------------------------


def _fast_path(goal: RefutationGoal, model: dict, cfg: SearchConfig):
    """Compare the value Ensure assigns to the result with the expected one."""
    t = claimed_result(goal.origin_spec)
    if t is None:
        return None
    env = goal.post_env(model)
    if not all(v in env or v in ("nil", "empty", "NULL", "null") for v in term_vars(t)):
        return None
    shape = goal.mapping.result.shape
    for c in conjuncts(goal.origin_spec.ensure):
        if isinstance(c, Pred) and c.args and c.args[0] == Var("__return") and shape == "scalar":
            return None
    claimed = funs.eval_term(t, env, cfg.table, cfg.fuel)
    return claimed, values_equal(claimed, goal.expected)


def decide_builtin(goal: RefutationGoal, cfg: SearchConfig | None = None) -> CaseVerdict:
    cfg = cfg or SearchConfig()
    cid = goal.case.case_id
    if goal.precondition == "unsatisfiable":
        return CaseVerdict(
            cid,
            Refuted,
            "precondition-unsatisfiable",
            "the Require clause has no model on the example input "
            f"({_show_inputs(goal)}); the specification excludes an input the problem allows",
        )
    if goal.precondition == "undetermined":
        return CaseVerdict(cid, Unknown, "undetermined", "Require could not be decided within the search bound")
    try:
        undecided = []
        for model in goal.models:
            fp = _fast_path(goal, model, cfg)
            if fp is not None and not fp[1]:
                return CaseVerdict(
                    cid,
                    Refuted,
                    "postcondition-violated",
                    f"Ensure determines the result as {show(fp[0])} but the example expects "
                    f"{show(goal.expected)} (inputs {_show_inputs(goal)})",
                )
            out = check(goal.post_heap, goal.origin_spec.ensure, goal.post_env(model), cfg)
            if out.result is Unsat:
                return CaseVerdict(
                    cid,
                    Refuted,
                    "postcondition-violated",
                    f"Ensure does not hold on the post-state with result {show(goal.expected)} "
                    f"(inputs {_show_inputs(goal)}{_show_model(model)})",
                )
            if out.result is not Sat:
                undecided.append("; ".join(out.reasons) or "search bound reached")
    except FuelExhausted:
        return CaseVerdict(cid, Unknown, "fuel", "evaluation ran out of fuel")
    except (EvalError, SortError, UnboundVar) as err:
        return CaseVerdict(cid, Unknown, "evaluation", f"could not evaluate the postcondition: {err}")
    if undecided:
        return CaseVerdict(cid, Unknown, "witness-bound", undecided[0])
    return CaseVerdict(cid, NotRefuted, "consistent", f"the example ({_show_inputs(goal)} -> {show(goal.expected)}) satisfies Ensure")


def _show_inputs(goal) -> str:
    return ", ".join(f"{k} = {show(v)}" for k, v in goal.inputs.items())


def _show_model(model) -> str:
    return "".join(f", {k} = {show(v)}" for k, v in model.items())


def decide(goal: RefutationGoal, backend=None, cfg: SearchConfig | None = None, defs_text: str = "") -> CaseVerdict:
    backend = backend or Builtin()
    verdict = decide_builtin(goal, cfg)
    if not isinstance(backend, ExternalCommand):
        return verdict
    if verdict.status is not Unknown and not backend.confirm:
        return verdict
    try:
        code = run_external(backend, emit_coq_goal(goal.case, _case_index(goal.case)), defs_text)
    except BackendIOFailure as err:
        if verdict.status is Unknown:
            return CaseVerdict(verdict.case_id, Unknown, "backend", str(err))
        return CaseVerdict(verdict.case_id, Unknown, "backend", f"external confirmation failed: {err}")
    if verdict.status is Unknown:
        if code == 0:
            return CaseVerdict(verdict.case_id, Refuted, "external", "the external prover discharged the negated goal")
        return verdict
    # confirmation mode: both must agree on a refutation
    if verdict.status is Refuted and code != 0:
        return CaseVerdict(verdict.case_id, Unknown, "unconfirmed", verdict.report + "; the external prover did not confirm")
    return verdict


def _case_index(rc: RefutationCase) -> int:
    digits = "".join(ch for ch in rc.case_id if ch.isdigit())
    return int(digits) if digits else 1


def run_external(backend: ExternalCommand, goal_text: str, defs_text: str = "") -> int:
    """Write the goal to a temp dir, run the command, return its exit code."""
    with _semaphore(backend), tempfile.TemporaryDirectory(prefix="slspec-goal-") as tmp:
        goal_path = Path(tmp) / "goal.v"
        pre_path = Path(tmp) / "preamble.defs"
        goal_path.write_text(goal_text, encoding="utf-8")
        pre_path.write_text(defs_text, encoding="utf-8")
        cmd = backend.template.format(
            file=shlex.quote(str(goal_path)), timeout=backend.timeout, preamble=shlex.quote(str(pre_path))
        )
        try:
            proc = subprocess.run(cmd, shell=True, timeout=backend.timeout, capture_output=True)
        except subprocess.TimeoutExpired:
            raise BackendIOFailure(f"external prover timed out after {backend.timeout}s") from None
        except OSError as err:
            raise BackendIOFailure(f"cannot run external prover: {err}") from err
        if proc.returncode not in (0, 1):
            raise BackendIOFailure(f"external prover exited with status {proc.returncode}")
        return proc.returncode


def refute_spec(
    spec,
    cases,
    backend=None,
    mapping: ShapeMapping | None = None,
    defs=None,
    cfg: SearchConfig | None = None,
    parallelism: int = 1,
    defs_text: str = "",
) -> Verdict:
    """Decide every case; any refutation makes the aggregate Refuted.

    ``defs_text`` is handed to an external prover as its preamble file.
    """
    cases = list(cases)
    if not cases:
        return Verdict(Unknown, (), "no-cases")
    cfg = cfg or SearchConfig(defs=defs)

    def one(rc):
        try:
            goal = negate_postcondition(spec, rc, mapping, defs, cfg)
        except UnboundSpecVariable as err:
            return CaseVerdict(rc.case_id, Unknown, "unbound-variable", str(err))
        except SanityCheckFailure as err:
            return CaseVerdict(rc.case_id, Unknown, "sanity", str(err))
        except (EvalError, SortError, UnboundVar) as err:
            return CaseVerdict(rc.case_id, Unknown, "evaluation", f"could not evaluate the case: {err}")
        except FuelExhausted:
            return CaseVerdict(rc.case_id, Unknown, "fuel", "evaluation ran out of fuel")
        return decide(goal, backend, cfg, defs_text=defs_text)

    if parallelism > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(one, cases))
    else:
        results = [one(rc) for rc in cases]
    statuses = {r.status for r in results}
    if Refuted in statuses:
        w = next(r for r in results if r.status is Refuted)
        return Verdict(Refuted, tuple(results), f"refuted by {w.case_id}")
    if Unknown in statuses:
        return Verdict(Unknown, tuple(results), "some cases undecided")
    return Verdict(NotRefuted, tuple(results), "no case refutes the specification")


# -- goal files -------------------------------------------------------------------------


def emit_coq_goal(rc: RefutationCase, n: int, defs=None) -> str:
    """``Example example{n}:`` with one ``let`` per binding, then the goal.

    Two-space indentation, ``Proof.``/``Admitted.`` trailer, final newline.
    Functions are referenced by name; their definitions live in the preamble.
    """
    lines = [f"Example example{n}:"]
    lines += [f"  let {name} := {term} in" for name, term in rc.bindings]
    lines.append(f"  let result := {rc.result_term} in")
    lines.append(f"  let expected := {rc.expected_term} in")
    lines.append("  result <> expected.")
    lines.append("Proof.")
    lines.append("Admitted.")
    return "\n".join(lines) + "\n"
