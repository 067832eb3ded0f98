"""The generate / check / repair / refute state machine for one problem.

A run never raises for domain failures: each ends in a terminal ``Accepted``
or ``Failed(reason)`` state, and the full trace plus every intermediate
artifact is written to a fresh run directory before ``run_problem`` returns.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from .annot.ast import EXTERN_COQ
from .annot.parser import parse_extern
from .annot.signature import parse_signature_text, transform_signature
from .annot.source import insert_imports, render_source, strip_imports
from .checker import BuiltinChecker, Candidate, CheckResult, parse_reply
from .diagnostics import ErrorCategory, categorize, select_hints
from .errors import (
    AuthError,
    CassetteMiss,
    GenerationParseFailure,
    IOFailure,
    OracleParseFailure,
    RefineParseFailure,
    SanityCheckFailure,
    SlspecError,
    SortMismatch,
    TransportError,
    UnrecoverableDiagnostic,
)
from .logic import funs
from .logic.satisfy import SearchConfig
from .prompts import (
    ModelParams,
    TemplateSet,
    generation_prompt,
    import_prompt,
    semantic_repair_prompt,
    syntax_repair_prompt,
)
from .refutation import NotRefuted, Unknown, emit_coq_goal, refute_spec
from .testcases import (
    DEFAULT_RETRIES,
    build_refutation_case,
    canonicalize,
    derive_refutation_case,
    type_example,
)

MANIFEST_SCHEMA = "slspec-run"
MANIFEST_VERSION = 1
ORACLE_ERRORS = (CassetteMiss, TransportError, AuthError)

# terminal failure reasons
BUDGET = "budget"
GENERATION_PARSE = "GenerationParseFailure"
REFINE_PARSE = "RefineParseFailure"
UNRECOVERABLE = "UnrecoverableDiagnostic"
REFUTED = "Refuted"
ORACLE = "OracleFailure"
EXAMPLES = "ExamplesFailure"
INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class PipelineConfig:
    max_syntax_iters: int = 5
    max_semantic_iters: int = 2
    retries: int = DEFAULT_RETRIES
    backend: object = None  # None -> builtin decision procedure
    checker: object = field(default_factory=BuiltinChecker)
    templates: TemplateSet = field(default_factory=TemplateSet)
    params: ModelParams = field(default_factory=ModelParams)
    workspace: str | None = None
    hints_per_category: int = 2
    case_source: str = "oracle"  # oracle | derived
    search: SearchConfig = field(default_factory=SearchConfig)

    def __post_init__(self):
        for name in ("max_syntax_iters", "max_semantic_iters", "retries", "hints_per_category"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.case_source not in ("oracle", "derived"):
            raise ValueError("case_source must be 'oracle' or 'derived'")

    @classmethod
    def from_dict(cls, d: dict, **overrides) -> "PipelineConfig":
        known = {"max_syntax_iters", "max_semantic_iters", "retries", "workspace", "hints_per_category", "case_source"}
        unknown = set(d) - known - {"templates", "model", "temperature", "max_tokens", "checker", "backend"}
        if unknown:
            raise ValueError("unknown config keys: " + ", ".join(sorted(unknown)))
        # manifests record these by name; only the builtins can be rebuilt from a name
        for key in ("checker", "backend"):
            if d.get(key, "builtin") != "builtin":
                raise ValueError(f"config key {key!r} only accepts 'builtin' (use command-line flags for others)")
        kw = {k: d[k] for k in known if k in d}
        if "templates" in d:
            kw["templates"] = TemplateSet(d["templates"])
        mp = {k: d[k] for k in ("model", "temperature", "max_tokens") if k in d}
        if mp:
            kw["params"] = ModelParams(**mp)
        kw.update(overrides)
        return cls(**kw)

    def to_dict(self) -> dict:
        return {
            "max_syntax_iters": self.max_syntax_iters,
            "max_semantic_iters": self.max_semantic_iters,
            "retries": self.retries,
            "hints_per_category": self.hints_per_category,
            "case_source": self.case_source,
            "model": self.params.model,
            "temperature": self.params.temperature,
            "max_tokens": self.params.max_tokens,
            "checker": getattr(self.checker, "name", type(self.checker).__name__),
            "backend": "builtin" if self.backend is None else type(self.backend).__name__,
        }


@dataclass(frozen=True)
class State:
    name: str
    detail: str = ""

    def __str__(self):
        return f"{self.name}({self.detail})" if self.detail else self.name


@dataclass
class PipelineRun:
    problem_id: str
    states: list = field(default_factory=list)
    artifacts: list = field(default_factory=list)  # (relative path, kind, text)
    oracle_calls: list = field(default_factory=list)  # stage names in call order
    final_candidate: Candidate | None = None
    final_verdict: object = None
    workspace: Path | None = None
    config: dict = field(default_factory=dict)

    @property
    def terminal(self) -> State | None:
        return self.states[-1] if self.states and self.states[-1].name in ("Accepted", "Failed") else None

    @property
    def accepted(self) -> bool:
        t = self.terminal
        return t is not None and t.name == "Accepted"

    @property
    def reason(self) -> str:
        t = self.terminal
        return t.detail if t is not None and t.name == "Failed" else ""

    def push(self, name: str, detail: str = ""):
        if self.terminal is not None:
            raise RuntimeError("trace already terminated")
        self.states.append(State(name, str(detail)))

    def add(self, path: str, kind: str, text: str):
        self.artifacts.append((path, kind, text))

    def outcome(self) -> str:
        return str(self.terminal) if self.terminal else "Running"

    def trace_dict(self) -> dict:
        return {
            "problem_id": self.problem_id,
            "states": [{"index": i, "state": s.name, "detail": s.detail} for i, s in enumerate(self.states)],
            "oracle_calls": list(self.oracle_calls),
        }


class _CallLog:
    """Per-run oracle wrapper recording the stage of every call."""

    def __init__(self, inner, run: PipelineRun):
        self.inner = inner
        self.run = run
        self._lock = threading.Lock()

    def complete(self, pb):
        with self._lock:
            self.run.oracle_calls.append(pb.stage)
        return self.inner.complete(pb)


class _Stop(Exception):
    def __init__(self, reason: str, detail: str = ""):
        super().__init__(reason)
        self.reason = reason
        self.detail = detail


# -- stages -------------------------------------------------------------------------


def _ask_candidate(make_prompt, oracle, retries: int, exc):
    """Query until ``parse_reply`` accepts the answer (R+1 attempts)."""
    error = None
    for _ in range(retries + 1):
        text = oracle.complete(make_prompt(error))
        try:
            return parse_reply(text)
        except ValueError as err:
            error = str(err)
    raise exc(f"no usable candidate after {retries + 1} attempts: {error}")


def generate_initial(problem, cfg: PipelineConfig, oracle) -> Candidate:
    return _ask_candidate(
        lambda err: generation_prompt(problem, cfg.templates, cfg.params, err), oracle, cfg.retries, GenerationParseFailure
    )


def _needs_import(src, table) -> list:
    names = set()
    for b in src.annotations:
        if b.kind == EXTERN_COQ:
            continue
        names |= _called(b.payload)
    prelude = funs.prelude()
    return sorted(n for n in names if n in table and n not in prelude)


def _called(payload) -> set:
    from .annot.ast import FunctionSpec
    from .checker import _functions_in

    if isinstance(payload, FunctionSpec):
        return _functions_in(payload.require) | _functions_in(payload.ensure)
    return _functions_in(payload)


def _parse_externs(text: str, wanted) -> list:
    decls = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("/*@") and line.endswith("*/"):
            line = line[3:-2].strip()
        if line.startswith("Extern Coq"):
            decls.extend(parse_extern(line))
    missing = set(wanted) - {d.name for d in decls}
    if missing:
        raise ValueError("missing declarations for: " + ", ".join(sorted(missing)))
    return [d for d in decls if d.name in set(wanted)]


def regenerate_imports(cand: Candidate, check: CheckResult, cfg: PipelineConfig, oracle) -> Candidate:
    """Strip every Extern line, ask for fresh declarations, insert them."""
    src = check.source
    names = _needs_import(src, check.table)
    defs = "\n\n".join(funs.definition_source(n, cand.defs_text) or funs.definition_source(n) or "" for n in names)
    stripped = strip_imports(src)
    error = None
    for _ in range(cfg.retries + 1):
        text = oracle.complete(import_prompt(names, defs, cfg.templates, cfg.params, error))
        try:
            decls = _parse_externs(text, names)
            new = insert_imports(stripped, decls)
        except (ValueError, SlspecError) as err:
            error = str(err)
            continue
        return Candidate(render_source(new), cand.defs_text)
    raise RefineParseFailure(f"import regeneration failed after {cfg.retries + 1} attempts: {error}")


def refine_step(cand: Candidate, check: CheckResult, cfg: PipelineConfig, oracle):
    """One repair. Returns (new candidate, path) where path is 'imports' or 'repair'."""
    diags = list(check.diagnostics)
    cats = [categorize(d) for d in diags]
    if not diags:
        raise ValueError("refine_step needs at least one diagnostic")
    if ErrorCategory.UNRECOVERABLE in cats:
        bad = diags[cats.index(ErrorCategory.UNRECOVERABLE)]
        raise UnrecoverableDiagnostic(bad.raw_text)
    if all(c is ErrorCategory.PREDICATE_IMPORT for c in cats) and check.source is not None:
        return regenerate_imports(cand, check, cfg, oracle), "imports"
    hints = []
    for c in dict.fromkeys(cats):
        hints.extend(select_hints(c, cfg.hints_per_category))
    new = _ask_candidate(
        lambda err: syntax_repair_prompt(cand, diags, hints, cfg.templates, cfg.params, err),
        oracle,
        cfg.retries,
        RefineParseFailure,
    )
    return new, "repair"


def _semantic_report(verdict, cases) -> str:
    w = verdict.witness
    by_id = {c.case_id: c for c in cases}
    lines = [f"Verdict: {verdict.status} ({verdict.reason})"]
    if w is not None:
        lines.append(f"Witness {w.case_id}: {w.kind}")
        lines.append(w.report)
        rc = by_id.get(w.case_id)
        if rc is not None:
            lines.append("Test case:")
            lines.append(emit_coq_goal(rc, _index(rc.case_id)).rstrip())
    return "\n".join(lines)


def _index(case_id: str) -> int:
    tail = case_id.rsplit("-", 1)[-1]
    return int(tail) if tail.isdigit() else 1


# -- run ---------------------------------------------------------------------------------


class _Runner:
    def __init__(self, problem, cfg: PipelineConfig, oracle):
        self.problem = problem
        self.cfg = cfg
        self.run = PipelineRun(str(problem.id), config=cfg.to_dict())
        self.oracle = _CallLog(oracle, self.run)
        self.signature = parse_signature_text(problem.signature)
        self.mapping = transform_signature(self.signature)
        self.step = 0
        self.round = 0
        self._typed = None

    # artifacts
    def _save_candidate(self, cand: Candidate, label: str):
        self.step += 1
        base = f"artifacts/step-{self.step:02d}-{label}"
        self.run.add(base + ".c", "spec", cand.text)
        if cand.defs_text.strip():
            self.run.add(base + ".defs", "defs", cand.defs_text)

    def _save_diags(self, check: CheckResult):
        doc = [dict(d.to_dict(), category=str(categorize(d))) for d in check.diagnostics]
        self.run.add(f"artifacts/step-{self.step:02d}-diagnostics.json", "diagnostics", _json(doc))

    # stages
    def check(self, cand) -> CheckResult:
        self.run.push("SyntaxChecking")
        res = self.cfg.checker.check(cand, self.signature)
        self._save_diags(res)
        return res

    def syntax_loop(self, cand: Candidate, budget: int):
        """Check/repair until the candidate passes; returns (candidate, check, used)."""
        used = 0
        while True:
            res = self.check(cand)
            if res.ok:
                self.run.push("SyntaxOk")
                return cand, res, used
            cats = [categorize(d) for d in res.diagnostics]
            worst = ErrorCategory.UNRECOVERABLE if ErrorCategory.UNRECOVERABLE in cats else cats[0]
            self.run.push("SyntaxFailed", str(worst))
            if worst is ErrorCategory.UNRECOVERABLE:
                raise _Stop(UNRECOVERABLE)
            if used >= budget:
                raise _Stop(BUDGET)
            used += 1
            imports = all(c is ErrorCategory.PREDICATE_IMPORT for c in cats)
            if imports:
                self.run.push("ImportRegen")
            try:
                cand, path = refine_step(cand, res, self.cfg, self.oracle)
            except RefineParseFailure:
                raise _Stop(REFINE_PARSE) from None
            except UnrecoverableDiagnostic:
                raise _Stop(UNRECOVERABLE) from None
            self._save_candidate(cand, "imports" if path == "imports" else "repair")
            self.run.push("Generated", "imports" if path == "imports" else "repair")

    def typed_examples(self):
        if self._typed is None:
            typed = []
            for i, ex in enumerate(self.problem.examples, start=1):
                try:
                    te = type_example(ex, self.mapping, self.oracle, self.cfg.retries, self.cfg.templates, self.cfg.params)
                except (OracleParseFailure, SortMismatch) as err:
                    self.run.add(f"cases/typed-{i}.error.txt", "error", str(err) + "\n")
                    continue
                ce = canonicalize(te)
                typed.append((i, te, ce))
                self.run.add(f"cases/typed-{i}.txt", "canonical", f"{ce.bindings_text}\nexpected: {ce.expected_text}\n")
            self._typed = typed
        return self._typed

    def build_cases(self, cand: Candidate, spec) -> list:
        cases = []
        for i, te, ce in self.typed_examples():
            cid = f"case-{i}"
            if self.cfg.case_source == "derived":
                rc = derive_refutation_case(ce, spec, self.mapping, cid)
                if rc is None:
                    continue
            else:
                try:
                    rc = build_refutation_case(
                        ce, te, self.problem, cand.text, self.mapping, self.oracle, cid,
                        self.cfg.retries, self.cfg.templates, self.cfg.params,
                    )
                except (OracleParseFailure, SanityCheckFailure, SortMismatch) as err:
                    self.run.add(f"cases/round-{self.round}/{cid}.error.txt", "error", str(err) + "\n")
                    continue
            cases.append(rc)
            self.run.add(f"cases/round-{self.round}/{cid}.json", "case", rc.to_json() + "\n")
            self.run.add(f"goals/round-{self.round}/example{i}.v", "goal", emit_coq_goal(rc, i))
        return cases

    def refute(self, cand: Candidate, check: CheckResult):
        self.round += 1
        self.run.push("Refuting", f"round {self.round}")
        spec = check.source.funcspec
        cases = self.build_cases(cand, spec)
        if not cases:
            raise _Stop(EXAMPLES)
        preamble = check.preamble(cand.defs_text)
        if preamble:
            self.run.add(f"goals/round-{self.round}/preamble.defs", "preamble", preamble)
        search = SearchConfig(
            self.cfg.search.max_assignments, self.cfg.search.int_radius, self.cfg.search.fuel, check.table,
            self.cfg.search.check_sorts,
        )
        verdict = refute_spec(spec, cases, self.cfg.backend, self.mapping, check.table, search, defs_text=preamble)
        self.run.add(f"verdicts/round-{self.round}.json", "verdict", _json(verdict.to_dict()))
        self.run.final_verdict = verdict
        return verdict, cases

    def execute(self):
        run, cfg = self.run, self.cfg
        run.push("Init")
        try:
            try:
                cand = generate_initial(self.problem, cfg, self.oracle)
            except GenerationParseFailure:
                raise _Stop(GENERATION_PARSE) from None
            self._save_candidate(cand, "generate")
            run.push("Generated", "initial")
            cand, check, _ = self.syntax_loop(cand, cfg.max_syntax_iters)
            semantic_left = cfg.max_semantic_iters
            while True:
                verdict, cases = self.refute(cand, check)
                if verdict.status is NotRefuted:
                    run.final_candidate = cand
                    run.push("Accepted")
                    return run
                if verdict.status is Unknown:
                    raise _Stop(INCONCLUSIVE)
                run.push("Refuted", verdict.witness.case_id)
                if semantic_left <= 0:
                    raise _Stop(REFUTED)
                semantic_left -= 1
                run.push("SemanticRefine")
                report = _semantic_report(verdict, cases)
                try:
                    cand = _ask_candidate(
                        lambda err, c=cand: semantic_repair_prompt(self.problem, c, report, cfg.templates, cfg.params, err),
                        self.oracle,
                        cfg.retries,
                        RefineParseFailure,
                    )
                except RefineParseFailure:
                    raise _Stop(REFINE_PARSE) from None
                self._save_candidate(cand, "semantic")
                run.push("Generated", "semantic")
                # syntax re-check, repairs charged to the semantic budget
                cand, check, used = self.syntax_loop(cand, semantic_left)
                semantic_left -= used
        except _Stop as stop:
            run.push("Failed", stop.reason)
        except ORACLE_ERRORS as err:
            run.add("artifacts/oracle-error.txt", "error", f"{type(err).__name__}: {err}\n")
            run.push("Failed", ORACLE)
        return run


def run_problem(problem, cfg: PipelineConfig, oracle, root=None, persist: bool = True) -> PipelineRun:
    """Execute the state machine and (by default) persist the workspace."""
    run = _Runner(problem, cfg, oracle).execute()
    root = root if root is not None else cfg.workspace
    if persist and root is not None:
        persist_run(run, root)
    return run


# -- persistence ----------------------------------------------------------------------------


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _run_dir(base: Path) -> Path:
    stamp = time.strftime("%Y%m%dT%H%M%S", time.gmtime())
    cand = base / f"run-{stamp}"
    n = 1
    while True:
        try:
            cand.mkdir(parents=True, exist_ok=False)
            return cand
        except FileExistsError:
            n += 1
            cand = base / f"run-{stamp}-{n}"


def manifest_dict(run: PipelineRun) -> dict:
    t = run.terminal
    specs = [p for p, k, _ in run.artifacts if k == "spec"]
    return {
        "schema": MANIFEST_SCHEMA,
        "version": MANIFEST_VERSION,
        "problem_id": run.problem_id,
        "status": t.name if t else "Running",
        "reason": run.reason,
        "oracle_call_count": len(run.oracle_calls),
        "config": run.config,
        "final_spec": specs[-1] if specs else None,
        "final_verdict": str(run.final_verdict.status) if run.final_verdict is not None else None,
        "preambles": sorted(p for p, k, _ in run.artifacts if k == "preamble"),
        "artifacts": [{"path": p, "kind": k} for p, k, _ in run.artifacts],
    }


def persist_run(run: PipelineRun, root) -> Path:
    """Write the run into ``root/<problem>/run-<timestamp>[-n]/``; returns the
    manifest path.  The timestamp only appears in the directory name."""
    try:
        d = _run_dir(Path(root) / run.problem_id)
        for rel, _, text in run.artifacts:
            p = d / rel
            p.parent.mkdir(parents=True, exist_ok=True)
            p.write_text(text, encoding="utf-8")
        if run.final_verdict is not None:
            (d / "verdicts").mkdir(exist_ok=True)
            (d / "verdicts" / "final.json").write_text(_json(run.final_verdict.to_dict()), encoding="utf-8")
        (d / "trace.json").write_text(_json(run.trace_dict()), encoding="utf-8")
        m = d / "manifest.json"
        m.write_text(_json(manifest_dict(run)), encoding="utf-8")
    except OSError as err:
        raise IOFailure(f"cannot write run workspace under {root}: {err}") from err
    run.workspace = d
    return m


def load_candidate(path) -> Candidate:
    """A spec file plus a sibling ``.defs`` file when present."""
    p = Path(path)
    defs = p.with_suffix(".defs")
    return Candidate(p.read_text(encoding="utf-8"), defs.read_text(encoding="utf-8") if defs.exists() else "")
