"""Checker adapters producing Diagnostics for candidate specifications.

The builtin checker combines the annotation parser, the sort checker and the
definition checker.  Its messages use fixed phrasings that the shipped rule
file keys on; Coq-side problems (definitions, unresolved names, sort clashes
in function applications) are phrased the way a Coq checker words them.
"""

from __future__ import annotations

import re
import shlex
import subprocess
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from .annot.ast import assertion_terms, free_vars, term_functions
from .annot.signature import logic_sort_of_ctype, transform_signature
from .annot.sorts import BUILTIN_PREDICATES, CONSTANTS, CONSTRUCTORS, SortEnv, check_assertion, normalize_sort
from .annot.source import parse_annotated_source
from .diagnostics import Diagnostic
from .errors import (
    AnnotSyntaxError,
    ArityError,
    DuplicateDef,
    SignatureNotFound,
    SortError,
    UnboundVar,
    UnknownSymbol,
    UnsupportedType,
)
from .logic import funs

ANNOT, COQ = "annotation-checker", "coq-checker"
_CLAUSE_WORDS = {"'Require'", "'Ensure'", "'With'"}


@dataclass(frozen=True)
class Candidate:
    """A generated specification: annotated C text plus optional definitions."""

    text: str
    defs_text: str = ""


@dataclass(frozen=True)
class CheckResult:
    diagnostics: tuple
    source: object = None  # AnnotatedSource when the file parsed
    table: object = None  # FunTable for evaluation
    user_defs: tuple = field(default=())

    @property
    def ok(self) -> bool:
        return not self.diagnostics

    def preamble(self, defs_text: str = "") -> str:
        """Definitions an external prover needs: shipped sources for the
        declared library functions, then the user's own block."""
        own = {d.name for d in self.user_defs}
        parts = []
        if self.source is not None:
            for ext in self.source.externs:
                if ext.name not in own:
                    text = funs.definition_source(ext.name)
                    if text:
                        parts.append(text)
        if defs_text.strip():
            parts.append(defs_text.strip())
        return "\n\n".join(parts) + ("\n" if parts else "")


# -- reply parsing ------------------------------------------------------------------

_FENCE_RE = re.compile(r"```([A-Za-z]*)[ \t]*\n(.*?)```", re.S)


def parse_reply(text: str) -> Candidate:
    """Extract the ```c block (required) and an optional ```defs block."""
    code, defs = None, ""
    for m in _FENCE_RE.finditer(text):
        lang, body = m.group(1).lower(), m.group(2)
        if lang in ("c", "") and code is None:
            code = body
        elif lang in ("defs", "coq") and not defs:
            defs = body
    if code is None:
        raise ValueError("reply contains no ```c code block")
    if "(" not in code:
        raise ValueError("code block holds no function declaration")
    return Candidate(code, defs)


# -- definitions ----------------------------------------------------------------------


def _base_table(shadowed) -> funs.FunTable:
    """Library without the entries a user block redefines (prelude ones stay)."""
    table = funs.prelude()
    for d in funs.library():
        if d.name not in table and d.name not in shadowed:
            table = funs.register_function_def(table, d)
    return table


def build_table(user_defs) -> funs.FunTable:
    table = _base_table({d.name for d in user_defs})
    for d in user_defs:
        table = funs.register_function_def(table, d)
    return table


def check_defs(defs_text: str):
    """(diagnostics, table, user_defs) for a definitions block."""
    diags = []
    try:
        user = funs.parse_defs(defs_text) if defs_text.strip() else []
    except AnnotSyntaxError as err:
        loc = (err.line, err.column) if err.line else None
        where = f'File "defs", line {err.line}, characters {err.column}: ' if err.line else ""
        return [Diagnostic(COQ, f"{where}Syntax error: {err}", loc)], build_table([]), ()
    table = _base_table({d.name for d in user})
    kept = []
    for d in user:
        try:
            table = funs.register_function_def(table, d)
            kept.append(d)
        except DuplicateDef as err:
            diags.append(Diagnostic(COQ, f"Error: {err.name} already exists."))
        except UnknownSymbol as err:
            diags.append(Diagnostic(COQ, f"Error: The reference {err.name} was not found in the current environment."))
        except UnboundVar as err:
            diags.append(Diagnostic(COQ, f"Error: The reference {err.name} was not found in the current environment."))
        except SortError as err:
            diags.append(Diagnostic(COQ, _coq_type_message(d.name, err)))
    try:
        full = build_table(kept)
    except (DuplicateDef, SortError):
        full = table
    return diags, full, tuple(kept)


def _coq_type_message(where: str, err: SortError) -> str:
    term = err.term if isinstance(err.term, str) else _short(err.term)
    return (
        f'Error: In {where}: The term "{term}" has type "{err.found}" '
        f'while it is expected to have type "{err.expected}".'
    )


def _short(t) -> str:
    from .annot.render import render_term

    try:
        return render_term(t, True)
    except Exception:
        return repr(t)


# -- builtin checker ----------------------------------------------------------------------


def check_candidate(cand: Candidate, expected_signature=None) -> CheckResult:
    """Every problem found in ``cand``, as Diagnostics in file order."""
    diags, table, user = check_defs(cand.defs_text)
    target = expected_signature.name if expected_signature is not None else None
    try:
        src = parse_annotated_source(cand.text, target)
    except AnnotSyntaxError as err:
        return CheckResult(tuple(diags) + (_syntax_diag(err),), None, table, user)
    except SignatureNotFound as err:
        return CheckResult(tuple(diags) + (Diagnostic(ANNOT, f"no declaration of the target function: {err}"),), None, table, user)

    sig = src.signature
    if expected_signature is not None and sig != expected_signature:
        diags.append(
            Diagnostic(ANNOT, f"signature mismatch: expected `{expected_signature.render()}` but found `{sig.render()}`")
        )
        return CheckResult(tuple(diags), src, table, user)
    try:
        mapping = transform_signature(sig)
    except UnsupportedType as err:
        diags.append(Diagnostic(ANNOT, str(err)))
        return CheckResult(tuple(diags), src, table, user)

    spec = src.funcspec
    if spec is None:
        diags.append(
            Diagnostic(ANNOT, f"malformed function specification: no With/Require/Ensure annotation for '{sig.name}'")
        )
        return CheckResult(tuple(diags), src, table, user)
    loc = _block_location(src)

    # Extern declarations must name something definable with a matching sort.
    declared_funs, declared_preds = {}, {}
    for d in src.externs:
        args = tuple(normalize_sort(s) for s in d.arg_sorts)
        res = normalize_sort(d.result_sort)
        if res == "Assertion":
            declared_preds[d.name] = args
            continue
        declared_funs[d.name] = (args, res)
        fd = table.get(d.name)
        if fd is None:
            diags.append(Diagnostic(COQ, f"Error: The reference {d.name} was not found in the current environment."))
        elif fd.signature != (args, res):
            want = " -> ".join(list(fd.signature[0]) + [fd.signature[1]])
            diags.append(
                Diagnostic(
                    COQ,
                    f'Error: The term "{d.name}" has type "{d.sort_text}" while it is expected to have type "{want}".',
                )
            )

    functions = dict(funs.prelude().signatures())
    for name, sig_ in declared_funs.items():
        functions[name] = sig_
    preds = dict(BUILTIN_PREDICATES)
    preds.update(declared_preds)

    params = {n: logic_sort_of_ctype(t) for t, n in sig.params}
    withs = {n: normalize_sort(s) for n, s in spec.with_params}
    base_vars = {**params, **withs}
    env_req = SortEnv.build(base_vars, functions, declared_preds)
    ret_sort = "ptr" if mapping.result.is_pointer else ("unit" if mapping.result.shape == "void" else "Z")
    env_ens = env_req.bind_all({"__return": ret_sort})

    for clause, a, env in (("Require", spec.require, env_req), ("Ensure", spec.ensure, env_ens)):
        problems = []
        for fn in sorted(_functions_in(a)):
            if fn in functions or fn in CONSTRUCTORS or fn == "addr":
                continue
            if fn in preds:
                continue
            if fn in table:
                problems.append(
                    Diagnostic(ANNOT, f"unresolved logical function '{fn}': missing Extern Coq declaration", loc)
                )
            else:
                problems.append(
                    Diagnostic(COQ, f"Error: The reference {fn} was not found in the current environment.", loc)
                )
        known = set(env.vars) | set(CONSTANTS)
        for v in sorted(free_vars(a) - known):
            problems.append(Diagnostic(ANNOT, f"unbound logical variable '{v}' in {clause}", loc))
        if not problems:
            problems.extend(_sort_diags(a, env, preds, clause, loc))
        diags.extend(problems)
    return CheckResult(tuple(diags), src, table, user)


def _functions_in(a) -> set:
    from .annot.ast import Disj, Exists, PureConj, SepConj

    out = set()
    match a:
        case SepConj(lhs=l, rhs=r) | PureConj(lhs=l, rhs=r) | Disj(lhs=l, rhs=r):
            return _functions_in(l) | _functions_in(r)
        case Exists(body=b):
            return _functions_in(b)
    for t in assertion_terms(a):
        out |= term_functions(t)
    return out


_OF_NAME = re.compile(r"of '([^']+)'")


def _sort_diags(a, env, preds, clause, loc) -> list:
    try:
        check_assertion(a, env)
    except UnknownSymbol as err:
        if err.kind == "predicate":
            return [Diagnostic(ANNOT, f"predicate instantiation error in {clause}: unknown predicate '{err.name}'", loc)]
        return [Diagnostic(COQ, f"Error: The reference {err.name} was not found in the current environment.", loc)]
    except ArityError as err:
        if err.kind == "predicate":
            return [Diagnostic(ANNOT, f"predicate instantiation error in {clause}: {err}", loc)]
        return [
            Diagnostic(COQ, f'Illegal application: the function "{err.name}" expects {err.expected} arguments but got {err.got}.', loc)
        ]
    except SortError as err:
        m = _OF_NAME.search(str(err))
        if (m and m.group(1) in preds) or "is a function, not a predicate" in str(err):
            return [Diagnostic(ANNOT, f"predicate instantiation error in {clause}: {err}", loc)]
        term = err.term if isinstance(err.term, str) else _short(err.term)
        return [
            Diagnostic(
                COQ,
                f'Error: In {clause}: The term "{term}" has type "{err.found}" while it is expected to have type "{err.expected}".',
                loc,
            )
        ]
    return []


def _block_location(src):
    block = src.funcspec_block
    if block is None:
        return None
    s = block.span[0]
    text = src.raw_text
    return (text.count("\n", 0, s) + 1, s - (text.rfind("\n", 0, s) + 1) + 1)


def _syntax_diag(err: AnnotSyntaxError) -> Diagnostic:
    where = f"line {err.line}, column {err.column}" if err.line else f"offset {err.position}"
    expected = set(err.expected)
    if expected & _CLAUSE_WORDS:
        text = f"malformed function specification at {where}: {err}"
    else:
        text = f"annotation syntax error at {where}: {err}"
    return Diagnostic(ANNOT, text, (err.line, err.column) if err.line else None)


# -- external adapter -----------------------------------------------------------------------


@dataclass(frozen=True)
class ExternalChecker:
    """Run a verifier command on the candidate; each output line of a failing
    run becomes one Diagnostic."""

    template: str  # "{file}" and "{defs}" slots
    timeout: float = 60.0
    name: str = "external"

    def check(self, cand: Candidate, expected_signature=None) -> CheckResult:
        with tempfile.TemporaryDirectory(prefix="slspec-check-") as tmp:
            cfile, dfile = Path(tmp) / "candidate.c", Path(tmp) / "defs.defs"
            cfile.write_text(cand.text, encoding="utf-8")
            dfile.write_text(cand.defs_text, encoding="utf-8")
            cmd = self.template.format(file=shlex.quote(str(cfile)), defs=shlex.quote(str(dfile)))
            try:
                proc = subprocess.run(cmd, shell=True, capture_output=True, timeout=self.timeout, text=True)
            except subprocess.TimeoutExpired:
                return CheckResult((Diagnostic(COQ, "external checker timed out"),))
        if proc.returncode == 0:
            return check_candidate(cand, expected_signature)
        lines = [l for l in (proc.stdout + proc.stderr).splitlines() if l.strip()]
        return CheckResult(tuple(Diagnostic(COQ, l) for l in lines) or (Diagnostic(COQ, "external checker failed"),))


@dataclass(frozen=True)
class BuiltinChecker:
    name: str = "builtin"

    def check(self, cand: Candidate, expected_signature=None) -> CheckResult:
        return check_candidate(cand, expected_signature)
