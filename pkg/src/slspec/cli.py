"""Command-line entry point.

Exit codes: 0 success, 1 negative but well-formed outcome (errors found,
specification refuted, run failed), 2 usage error, 3 I/O or backend failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .annot.render import render_annotation
from .annot.signature import transform_signature
from .annot.source import parse_annotated_source
from .bench import compute_distribution, load_manifest, render_distribution_markdown, render_report, run_benchmark, write_report
from .checker import Candidate, ExternalChecker, check_candidate
from .diagnostics import Diagnostic, categorize
from .errors import (
    AnnotSyntaxError,
    AuthError,
    BackendIOFailure,
    CassetteMiss,
    DuplicateId,
    GenerationParseFailure,
    IOFailure,
    SchemaError,
    SignatureNotFound,
    SlspecError,
    TransportError,
)
from .logic.satisfy import SearchConfig
from .oracle import Cassette, LiveBackend, RecordBackend, ReplayBackend
from .pipeline import PipelineConfig, generate_initial, load_candidate, run_problem
from .refutation import ExternalCommand, Refuted, emit_coq_goal, refute_spec
from .testcases import RefutationCase

EXIT_OK, EXIT_NEGATIVE, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3
IO_ERRORS = (IOFailure, OSError, TransportError, AuthError, CassetteMiss, BackendIOFailure, SchemaError, DuplicateId)

ENV_HELP = """environment:
  SLSPEC_WORKSPACE    default workspace root for run/bench
  SLSPEC_LLM_URL      chat-completions endpoint for live generation
  SLSPEC_LLM_API_KEY  bearer token for the endpoint
  SLSPEC_PROVER_CMD   external prover command template ({file}, {preamble}, {timeout})
"""


class _Usage(Exception):
    pass


def _emit(args, obj, text: str):
    if args.format == "json":
        print(json.dumps(obj, indent=2, sort_keys=True))
    else:
        print(text.rstrip("\n"))


def _read(path) -> str:
    if str(path) == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise IOFailure(f"cannot read {path}: {err}") from err


def _config(args) -> PipelineConfig:
    doc = {}
    if getattr(args, "config", None):
        try:
            doc = json.loads(_read(args.config))
        except json.JSONDecodeError as err:
            raise _Usage(f"config file is not JSON: {err}") from None
    over = {}
    for key in ("max_syntax_iters", "max_semantic_iters", "retries"):
        v = getattr(args, key, None)
        if v is not None:
            over[key] = v
    over["backend"] = _prover(args)
    if getattr(args, "checker_cmd", None):
        over["checker"] = ExternalChecker(args.checker_cmd)
    try:
        return PipelineConfig.from_dict(doc, **over)
    except (ValueError, TypeError) as err:
        raise _Usage(str(err)) from None


def _prover(args):
    if getattr(args, "backend", "builtin") != "external":
        return None
    cmd = args.prover_cmd or os.environ.get("SLSPEC_PROVER_CMD")
    if not cmd:
        raise _Usage("--backend external needs --prover-cmd or SLSPEC_PROVER_CMD")
    return ExternalCommand(cmd, timeout=args.prover_timeout, confirm=args.confirm)


def _oracle(args):
    if args.cassette:
        paths = args.cassette
        cassettes = [Cassette.load(p) for p in paths]
        merged = Cassette()
        for c in cassettes:
            merged.entries.update(c.entries)
        return ReplayBackend(merged)
    url = os.environ.get("SLSPEC_LLM_URL")
    if not url:
        raise TransportError("no --cassette given and SLSPEC_LLM_URL is not set")
    live = LiveBackend(url)
    return RecordBackend(live, args.record) if args.record else live


def _workspace(args):
    return args.workspace or os.environ.get("SLSPEC_WORKSPACE") or "slspec-workspace"


# -- commands --------------------------------------------------------------------------------


def cmd_parse(args) -> int:
    text = _read(args.file)
    try:
        src = parse_annotated_source(text, args.target)
    except (AnnotSyntaxError, SignatureNotFound) as err:
        _emit(args, {"ok": False, "error": str(err)}, f"error: {err}")
        return EXIT_NEGATIVE
    blocks = [
        {"kind": b.kind, "span": list(b.span), "text": render_annotation(b)} for b in src.annotations
    ]
    obj = {"ok": True, "signature": src.signature.render(), "annotations": blocks}
    lines = [f"signature: {src.signature.render()}"]
    lines += [f"{b['kind']} @{b['span'][0]}-{b['span'][1]}: {b['text']}" for b in blocks]
    _emit(args, obj, "\n".join(lines))
    return EXIT_OK


def cmd_check(args) -> int:
    text = _read(args.file)
    defs = _read(args.defs) if args.defs else _sibling_defs(args.file)
    cand = Candidate(text, defs)
    res = ExternalChecker(args.checker_cmd).check(cand) if args.checker_cmd else check_candidate(cand)
    items = [dict(d.to_dict(), category=str(categorize(d))) for d in res.diagnostics]
    lines = [f"[{i['category']}] {i['raw_text']}" for i in items] or ["ok"]
    _emit(args, {"ok": res.ok, "diagnostics": items}, "\n".join(lines))
    return EXIT_OK if res.ok else EXIT_NEGATIVE


def _sibling_defs(path) -> str:
    if str(path) == "-":
        return ""
    p = Path(path).with_suffix(".defs")
    return p.read_text(encoding="utf-8") if p.exists() else ""


def _load_cases(path) -> list:
    try:
        doc = json.loads(_read(path))
    except json.JSONDecodeError as err:
        raise _Usage(f"cases file is not JSON: {err}") from None
    items = doc if isinstance(doc, list) else doc.get("cases", [doc]) if isinstance(doc, dict) else None
    if items is None:
        raise _Usage("cases file must hold a case object or a list of them")
    try:
        return [RefutationCase.from_dict(d) for d in items]
    except (KeyError, TypeError) as err:
        raise _Usage(f"malformed case: {err}") from None


def cmd_refute(args) -> int:
    cand = load_candidate(args.spec) if not args.defs else Candidate(_read(args.spec), _read(args.defs))
    res = check_candidate(cand)
    if not res.ok:
        items = [dict(d.to_dict(), category=str(categorize(d))) for d in res.diagnostics]
        _emit(args, {"ok": False, "diagnostics": items}, "specification does not check:\n" + "\n".join(i["raw_text"] for i in items))
        return EXIT_NEGATIVE
    cases = _load_cases(args.cases)
    mapping = transform_signature(res.source.signature)
    verdict = refute_spec(
        res.source.funcspec, cases, _prover(args), mapping, res.table, SearchConfig(defs=res.table), args.parallelism,
        defs_text=res.preamble(cand.defs_text),
    )
    lines = [f"{verdict.status}: {verdict.reason}"]
    lines += [f"  {c.case_id}: {c.status} [{c.kind}] {c.report}" for c in verdict.cases]
    _emit(args, verdict.to_dict(), "\n".join(lines))
    return EXIT_NEGATIVE if verdict.status is Refuted else EXIT_OK


def cmd_emit_goal(args) -> int:
    cases = _load_cases(args.case_file)
    out = []
    for i, rc in enumerate(cases, start=1):
        n = args.index if args.index is not None and len(cases) == 1 else _number(rc.case_id, i)
        out.append(emit_coq_goal(rc, n))
    if args.format == "json":
        print(json.dumps({"goals": out}, indent=2))
    else:
        sys.stdout.write("\n".join(out))
    return EXIT_OK


def _number(case_id: str, default: int) -> int:
    digits = "".join(ch for ch in case_id if ch.isdigit())
    return int(digits) if digits else default


def _problem(args):
    m = load_manifest(args.manifest)
    try:
        return m.get(args.problem_id)
    except KeyError:
        raise _Usage(f"problem {args.problem_id!r} is not in {args.manifest}") from None


def cmd_generate(args) -> int:
    problem = _problem(args)
    cfg = _config(args)
    try:
        cand = generate_initial(problem, cfg, _oracle(args))
    except GenerationParseFailure as err:
        _emit(args, {"ok": False, "error": str(err)}, f"error: {err}")
        return EXIT_NEGATIVE
    _emit(args, {"ok": True, "text": cand.text, "defs": cand.defs_text}, cand.text + ("\n" + cand.defs_text if cand.defs_text else ""))
    return EXIT_OK


def cmd_run(args) -> int:
    problem = _problem(args)
    cfg = _config(args)
    run = run_problem(problem, cfg, _oracle(args), root=_workspace(args))
    obj = {
        "problem_id": run.problem_id,
        "outcome": run.outcome(),
        "states": [str(s) for s in run.states],
        "oracle_calls": len(run.oracle_calls),
        "workspace": str(run.workspace),
    }
    _emit(args, obj, f"{run.outcome()}\nstates: {' -> '.join(obj['states'])}\nworkspace: {run.workspace}")
    return EXIT_OK if run.accepted else EXIT_NEGATIVE


def cmd_bench(args) -> int:
    m = load_manifest(args.manifest)
    cfg = _config(args)
    oracle = _oracle(args)
    root = Path(_workspace(args))
    report = run_benchmark(m, cfg, oracle, args.parallelism, root=root)
    paths = write_report(report, root / "bench")
    if args.format == "json":
        print(render_report(report, "json").rstrip("\n"))
    else:
        print(render_report(report, "markdown").rstrip("\n"))
        print(f"\nreports: {paths.json_path} {paths.markdown_path}")
    return EXIT_OK


def cmd_categorize(args) -> int:
    text = _read(args.text_file) if args.text_file else args.text
    if text is None:
        raise _Usage("give diagnostic text or --file")
    d = Diagnostic(args.source, text)
    cat = categorize(d)
    _emit(args, {"diagnostic": d.to_dict(), "category": str(cat)}, str(cat))
    return EXIT_OK


def cmd_distribution(args) -> int:
    d = compute_distribution(load_manifest(args.manifest))
    _emit(args, d.to_dict(), render_distribution_markdown(d))
    return EXIT_OK


# -- parser -------------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default="text", help="output format")
    common.add_argument("--config", help="JSON file with pipeline defaults")
    common.add_argument("--workspace", help="workspace root (default $SLSPEC_WORKSPACE)")
    common.add_argument("--backend", choices=("builtin", "external"), default="builtin", help="refutation backend")
    common.add_argument("--prover-cmd", help="external prover command template")
    common.add_argument("--prover-timeout", type=float, default=60.0)
    common.add_argument("--confirm", action="store_true", help="also run the external prover on decided cases")
    common.add_argument("--parallelism", type=int, default=1)

    oracle = argparse.ArgumentParser(add_help=False)
    oracle.add_argument("--cassette", action="append", help="replay cassette (repeatable); default is live")
    oracle.add_argument("--record", help="record live answers into this cassette")
    oracle.add_argument("--max-syntax-iters", dest="max_syntax_iters", type=int)
    oracle.add_argument("--max-semantic-iters", dest="max_semantic_iters", type=int)
    oracle.add_argument("--retries", type=int)
    oracle.add_argument("--checker-cmd", help="external checker command template ({file}, {defs})")

    p = argparse.ArgumentParser(
        prog="slspec",
        description="Generate, check and refute separation-logic function specifications.",
        epilog=ENV_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("--version", action="version", version=f"slspec {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("parse", parents=[common], help="parse an annotated C file")
    s.add_argument("file")
    s.add_argument("--target", help="function whose specification to use")
    s.set_defaults(fn=cmd_parse)

    s = sub.add_parser("check", parents=[common], help="check an annotated C file")
    s.add_argument("file")
    s.add_argument("--defs", help="definitions file (default: sibling .defs)")
    s.add_argument("--checker-cmd", help="external checker command template")
    s.set_defaults(fn=cmd_check)

    s = sub.add_parser("refute", parents=[common], help="refute a specification with test cases")
    s.add_argument("spec")
    s.add_argument("cases", help="JSON case or list of cases")
    s.add_argument("--defs", help="definitions file (default: sibling .defs)")
    s.set_defaults(fn=cmd_refute)

    s = sub.add_parser("emit-goal", parents=[common], help="print the Coq goal for refutation cases")
    s.add_argument("case_file")
    s.add_argument("--index", type=int, help="example number for a single case")
    s.set_defaults(fn=cmd_emit_goal)

    for name, fn, helptext in (
        ("generate", cmd_generate, "generate an initial candidate for one problem"),
        ("run", cmd_run, "run the full pipeline for one problem"),
    ):
        s = sub.add_parser(name, parents=[common, oracle], help=helptext)
        s.add_argument("problem_id")
        s.add_argument("--manifest", required=True)
        s.set_defaults(fn=fn)

    s = sub.add_parser("bench", parents=[common, oracle], help="run every problem of a manifest")
    s.add_argument("--manifest", required=True)
    s.set_defaults(fn=cmd_bench)

    s = sub.add_parser("categorize", parents=[common], help="classify one diagnostic")
    s.add_argument("text", nargs="?")
    s.add_argument("--file", dest="text_file", help="read the diagnostic from a file ('-' for stdin)")
    s.add_argument("--source", default="annotation-checker", choices=("annotation-checker", "coq-checker"))
    s.set_defaults(fn=cmd_categorize)

    s = sub.add_parser("distribution", parents=[common], help="difficulty and data-structure table")
    s.add_argument("--manifest", required=True)
    s.set_defaults(fn=cmd_distribution)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    if getattr(args, "parallelism", 1) < 1:
        print("slspec: error: --parallelism must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.fn(args)
    except _Usage as err:
        print(f"slspec: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except IO_ERRORS as err:
        print(f"slspec: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_IO
    except SlspecError as err:
        print(f"slspec: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_NEGATIVE


if __name__ == "__main__":
    sys.exit(main())
