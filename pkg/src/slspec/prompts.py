"""Prompt assembly from editable template files.

Templates use ``string.Template`` slots (``$title``, ``$candidate``...).  A
custom directory may override any subset of the shipped files.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from string import Template

from .oracle import DEFAULT_MODEL, PromptBundle

TEMPLATE_NAMES = (
    "system",
    "predicate_docs",
    "few_shot",
    "error_patterns",
    "generate",
    "refine_syntax",
    "regen_imports",
    "refine_semantic",
    "type_example",
    "refutation_case",
)


@dataclass(frozen=True)
class ModelParams:
    model: str = DEFAULT_MODEL
    temperature: float = 0.0
    max_tokens: int = 2048


@dataclass(frozen=True)
class TemplateSet:
    directory: str | None = None

    def text(self, name: str) -> str:
        if self.directory:
            p = Path(self.directory) / f"{name}.txt"
            if p.exists():
                return p.read_text(encoding="utf-8")
        return resources.files("slspec").joinpath("data", "templates", f"{name}.txt").read_text(encoding="utf-8")

    def fill(self, name: str, **slots) -> str:
        return Template(self.text(name)).safe_substitute(**slots)


def _bundle(ts: TemplateSet, params: ModelParams, stage: str, sections) -> PromptBundle:
    return PromptBundle(
        ts.text("system").strip(),
        tuple((tag, text) for tag, text in sections if text is not None),
        params.model,
        params.temperature,
        params.max_tokens,
        stage,
    )


def _defs_block(defs_text: str) -> str:
    return f"\n```defs\n{defs_text.strip()}\n```\n" if defs_text and defs_text.strip() else ""


def _retry(error: str | None):
    return None if not error else f"Your previous answer could not be used:\n{error}"


def generation_prompt(problem, ts: TemplateSet, params: ModelParams, error: str | None = None) -> PromptBundle:
    return _bundle(
        ts,
        params,
        "generate",
        [
            ("predicate-docs", ts.text("predicate_docs")),
            ("few-shot", ts.text("few_shot")),
            ("error-patterns", ts.text("error_patterns")),
            ("diagnostics", _retry(error)),
            ("task", ts.fill("generate", title=problem.title, description=problem.description, signature=problem.signature)),
        ],
    )


def syntax_repair_prompt(candidate, diagnostics, hints, ts, params, error=None) -> PromptBundle:
    diag_text = "\n".join(d.raw_text for d in diagnostics)
    if error:
        diag_text += "\n" + _retry(error)
    hint_text = "\n\n".join(
        f"[{h.pattern_id}] {h.guidance}\nbefore: {h.example_before}\nafter:  {h.example_after}" for h in hints
    ) or None
    return _bundle(
        ts,
        params,
        "refine-syntax",
        [
            ("predicate-docs", ts.text("predicate_docs")),
            ("error-patterns", ts.text("error_patterns")),
            ("diagnostics", diag_text),
            ("hints", hint_text),
            ("task", ts.fill("refine_syntax", candidate=candidate.text.strip(), defs_block=_defs_block(candidate.defs_text))),
        ],
    )


def import_prompt(names, definitions_text, ts, params, error=None) -> PromptBundle:
    return _bundle(
        ts,
        params,
        "regen-imports",
        [
            ("diagnostics", _retry(error)),
            ("task", ts.fill("regen_imports", names=", ".join(names), definitions=definitions_text.strip())),
        ],
    )


def semantic_repair_prompt(problem, candidate, report, ts, params, error=None) -> PromptBundle:
    diag = report + ("\n" + _retry(error) if error else "")
    return _bundle(
        ts,
        params,
        "refine-semantic",
        [
            ("predicate-docs", ts.text("predicate_docs")),
            ("diagnostics", diag),
            (
                "task",
                ts.fill(
                    "refine_semantic",
                    title=problem.title,
                    description=problem.description,
                    candidate=candidate.text.strip(),
                    defs_block=_defs_block(candidate.defs_text),
                ),
            ),
        ],
    )


def type_example_prompt(example_text, signature, sorts_text, ts, params, error=None) -> PromptBundle:
    return _bundle(
        ts,
        params,
        "type-example",
        [
            ("diagnostics", _retry(error)),
            ("task", ts.fill("type_example", signature=signature, sorts=sorts_text, example=example_text)),
        ],
    )


def refutation_case_prompt(title, description, candidate_text, bindings, expected, ts, params, error=None):
    return _bundle(
        ts,
        params,
        "refutation-case",
        [
            ("diagnostics", _retry(error)),
            (
                "task",
                ts.fill(
                    "refutation_case",
                    title=title,
                    description=description,
                    candidate=candidate_text.strip(),
                    bindings=bindings,
                    expected=expected,
                ),
            ),
        ],
    )
