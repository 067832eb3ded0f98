"""Benchmark manifests, batch execution and reports."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

from .annot.signature import parse_signature_text, transform_signature
from .errors import DuplicateId, IOFailure, SchemaError, SignatureNotFound, UnsupportedType
from .problem import DATA_STRUCTURES, DIFFICULTIES, ProblemRecord
from .testcases import NLExample

MANIFEST_VERSION = 1
STRUCTURE_LABELS = {
    "integer": "Integer/Number",
    "array": "Array",
    "string": "String",
    "tree": "Tree",
    "linked-list": "Linked List",
}


@dataclass(frozen=True)
class Manifest:
    dataset: str
    problems: tuple
    version: int = MANIFEST_VERSION

    def __len__(self):
        return len(self.problems)

    def get(self, problem_id: str) -> ProblemRecord:
        for p in self.problems:
            if p.id == str(problem_id):
                return p
        raise KeyError(problem_id)

    def to_dict(self) -> dict:
        return {"dataset": self.dataset, "version": self.version, "problems": [p.to_dict() for p in self.problems]}


# -- loading ------------------------------------------------------------------------


def _text(rec: dict, rid, name) -> str:
    v = rec.get(name)
    if not isinstance(v, str) or not v.strip():
        raise SchemaError(rid, name, "missing or empty")
    return v


def validate_record(rec: dict) -> ProblemRecord:
    if not isinstance(rec, dict):
        raise SchemaError("?", "record", "not an object")
    rid = rec.get("id")
    if isinstance(rid, int):
        rid = str(rid)
    if not isinstance(rid, str) or not rid.strip():
        raise SchemaError("?", "id", "missing")
    title = _text(rec, rid, "title")
    description = _text(rec, rid, "description")
    difficulty = rec.get("difficulty")
    if difficulty not in DIFFICULTIES:
        raise SchemaError(rid, "difficulty", f"must be one of {', '.join(DIFFICULTIES)}")
    sig_text = _text(rec, rid, "signature")
    try:
        mapping = transform_signature(parse_signature_text(sig_text))
    except SignatureNotFound as err:
        raise SchemaError(rid, "signature", str(err)) from None
    except UnsupportedType as err:
        raise SchemaError(rid, "signature", f"unsupported type: {err}") from None
    if mapping.multi_output:
        raise SchemaError(rid, "signature", "multi-output")
    if mapping.result.shape == "void":
        raise SchemaError(rid, "signature", "no return value")
    raw_ex = rec.get("examples")
    if not isinstance(raw_ex, list) or not raw_ex:
        raise SchemaError(rid, "examples", "at least one example required")
    examples = []
    for e in raw_ex:
        try:
            examples.append(NLExample(e["input"], e["output"], e.get("explanation")))
        except (KeyError, TypeError, ValueError, AttributeError) as err:
            raise SchemaError(rid, "examples", str(err)) from None
    tags = rec.get("data_structures")
    if not isinstance(tags, list) or any(t not in DATA_STRUCTURES for t in tags):
        raise SchemaError(rid, "data_structures", f"tags must come from {', '.join(DATA_STRUCTURES)}")
    if frozenset(tags) != mapping.data_structures:
        want = sorted(mapping.data_structures)
        raise SchemaError(rid, "data_structures", f"signature implies {want}")
    return ProblemRecord(rid, title, difficulty, description, sig_text, tuple(examples), frozenset(tags))


def manifest_from_dict(doc: dict) -> Manifest:
    if not isinstance(doc, dict) or not isinstance(doc.get("problems"), list):
        raise SchemaError("<manifest>", "problems", "expected an object with a 'problems' list")
    if doc.get("version", MANIFEST_VERSION) != MANIFEST_VERSION:
        raise SchemaError("<manifest>", "version", f"unsupported version {doc.get('version')!r}")
    seen, out = set(), []
    for rec in doc["problems"]:
        p = validate_record(rec)
        if p.id in seen:
            raise DuplicateId(p.id)
        seen.add(p.id)
        out.append(p)
    return Manifest(str(doc.get("dataset", "")), tuple(out), MANIFEST_VERSION)


def load_manifest(path) -> Manifest:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise IOFailure(f"cannot read manifest {path}: {err}") from err
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise SchemaError("<manifest>", "json", str(err)) from None
    return manifest_from_dict(doc)


# -- distribution -------------------------------------------------------------------------


def percentage(count: int, total: int) -> Decimal:
    """100 * count / total with one decimal, halves rounded up."""
    if total == 0:
        return Decimal("0.0")
    return (Decimal(100) * count / Decimal(total)).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP)


@dataclass(frozen=True)
class Distribution:
    size: int
    difficulty: tuple  # ((label, count), ...)
    data_structures: tuple

    def percentages(self, section: str) -> tuple:
        rows = self.difficulty if section == "difficulty" else self.data_structures
        return tuple((label, percentage(c, self.size)) for label, c in rows)

    def to_dict(self) -> dict:
        return {
            "size": self.size,
            "difficulty": [{"label": l, "count": c, "percent": str(percentage(c, self.size))} for l, c in self.difficulty],
            "data_structures": [
                {"label": l, "count": c, "percent": str(percentage(c, self.size))} for l, c in self.data_structures
            ],
        }

    @classmethod
    def from_dict(cls, d) -> "Distribution":
        return cls(
            d["size"],
            tuple((r["label"], r["count"]) for r in d["difficulty"]),
            tuple((r["label"], r["count"]) for r in d["data_structures"]),
        )


def compute_distribution(m: Manifest) -> Distribution:
    diff = tuple((d, sum(1 for p in m.problems if p.difficulty == d)) for d in DIFFICULTIES)
    ds = tuple((s, sum(1 for p in m.problems if s in p.data_structures)) for s in DATA_STRUCTURES)
    return Distribution(len(m.problems), diff, ds)


# -- batch runs ---------------------------------------------------------------------------------


@dataclass(frozen=True)
class ProblemResult:
    problem_id: str
    status: str  # Accepted | Failed
    reason: str = ""
    oracle_calls: int = 0
    syntax_repairs: int | None = None  # repairs before the first SyntaxOk; None if never reached
    refuted_rounds: int = 0
    unknown_cases: int = 0
    workspace: str | None = None

    @property
    def outcome(self) -> str:
        return f"Failed({self.reason})" if self.status == "Failed" else self.status

    def to_dict(self) -> dict:
        return {
            "problem_id": self.problem_id,
            "status": self.status,
            "reason": self.reason,
            "oracle_calls": self.oracle_calls,
            "syntax_repairs": self.syntax_repairs,
            "refuted_rounds": self.refuted_rounds,
            "unknown_cases": self.unknown_cases,
        }

    @classmethod
    def from_dict(cls, d) -> "ProblemResult":
        return cls(
            d["problem_id"], d["status"], d.get("reason", ""), d.get("oracle_calls", 0), d.get("syntax_repairs"),
            d.get("refuted_rounds", 0), d.get("unknown_cases", 0),
        )


@dataclass(frozen=True)
class BenchReport:
    dataset: str
    results: tuple  # ProblemResult, manifest order
    distribution: Distribution
    k_values: tuple = (0, 1, 2, 3, 4, 5)

    def metrics(self) -> dict:
        rs = self.results
        reasons = {}
        for r in rs:
            if r.status == "Failed":
                reasons[r.reason] = reasons.get(r.reason, 0) + 1
        return {
            "problems": len(rs),
            "accepted": sum(r.status == "Accepted" for r in rs),
            "failed": sum(r.status == "Failed" for r in rs),
            "failed_by_reason": dict(sorted(reasons.items())),
            "syntactic_validity_at_k": {
                str(k): sum(1 for r in rs if r.syntax_repairs is not None and r.syntax_repairs <= k) for k in self.k_values
            },
            "refuted_candidates": sum(r.refuted_rounds for r in rs),
            "problems_with_refutation": sum(1 for r in rs if r.refuted_rounds),
            "unknown_cases": sum(r.unknown_cases for r in rs),
            "oracle_calls": sum(r.oracle_calls for r in rs),
        }

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "results": [r.to_dict() for r in self.results],
            "metrics": self.metrics(),
            "distribution": self.distribution.to_dict(),
            "k_values": list(self.k_values),
        }

    @classmethod
    def from_dict(cls, d) -> "BenchReport":
        return cls(
            d["dataset"],
            tuple(ProblemResult.from_dict(r) for r in d["results"]),
            Distribution.from_dict(d["distribution"]),
            tuple(d.get("k_values", (0, 1, 2, 3, 4, 5))),
        )


def summarize_run(run) -> ProblemResult:
    names = [s.name for s in run.states]
    repairs = None
    if "SyntaxOk" in names:
        repairs = names[: names.index("SyntaxOk")].count("SyntaxFailed")
    unknown = 0
    if run.final_verdict is not None:
        unknown = sum(1 for c in run.final_verdict.cases if str(c.status) == "Unknown")
    t = run.terminal
    return ProblemResult(
        run.problem_id,
        t.name if t else "Failed",
        run.reason if t else "incomplete",
        len(run.oracle_calls),
        repairs,
        names.count("Refuted"),
        unknown,
        str(run.workspace) if run.workspace else None,
    )


def run_benchmark(m: Manifest, cfg, oracle, parallelism: int = 1, root=None) -> BenchReport:
    """Run every problem; one failure never stops the batch."""
    from .pipeline import run_problem

    def one(p):
        try:
            return summarize_run(run_problem(p, cfg, oracle, root=root))
        except Exception as err:  # recorded per problem; the batch continues
            return ProblemResult(p.id, "Failed", f"InternalError: {type(err).__name__}: {err}")

    if parallelism > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            results = tuple(pool.map(one, m.problems))
    else:
        results = tuple(one(p) for p in m.problems)
    return BenchReport(m.dataset, results, compute_distribution(m))


# -- rendering ----------------------------------------------------------------------------------


def render_distribution_markdown(d: Distribution) -> str:
    lines = ["| Category | Count | Percentage (%) |", "|---|---:|---:|"]
    if d.size:
        lines.append("| **Difficulty** | | |")
        for (label, c), (_, pct) in zip(d.difficulty, d.percentages("difficulty")):
            lines.append(f"| {label} | {c} | {pct} |")
        lines.append("| **Data Structure** | | |")
        for (label, c), (_, pct) in zip(d.data_structures, d.percentages("data_structures")):
            lines.append(f"| {STRUCTURE_LABELS[label]} | {c} | {pct} |")
    return "\n".join(lines) + "\n"


def render_report(r: BenchReport, fmt: str = "json") -> str:
    if fmt == "json":
        return json.dumps(r.to_dict(), indent=2, sort_keys=True) + "\n"
    if fmt not in ("markdown", "markdown-table", "md"):
        raise ValueError(f"unknown report format {fmt!r}")
    out = [render_distribution_markdown(r.distribution)]
    out.append("| Problem | Outcome | Oracle calls | Syntax repairs | Refuted rounds |")
    out.append("|---|---|---:|---:|---:|")
    for x in r.results:
        rep = "-" if x.syntax_repairs is None else str(x.syntax_repairs)
        out.append(f"| {x.problem_id} | {x.outcome} | {x.oracle_calls} | {rep} | {x.refuted_rounds} |")
    return "\n".join(out) + "\n"


@dataclass
class BatchPaths:
    root: Path
    json_path: Path = field(init=False)
    markdown_path: Path = field(init=False)

    def __post_init__(self):
        self.json_path = self.root / "report.json"
        self.markdown_path = self.root / "report.md"


def write_report(r: BenchReport, root) -> BatchPaths:
    paths = BatchPaths(Path(root))
    try:
        paths.root.mkdir(parents=True, exist_ok=True)
        paths.json_path.write_text(render_report(r, "json"), encoding="utf-8")
        paths.markdown_path.write_text(render_report(r, "markdown"), encoding="utf-8")
    except OSError as err:
        raise IOFailure(f"cannot write report under {root}: {err}") from err
    return paths
