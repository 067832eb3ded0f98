"""Checker diagnostics, their taxonomy, and repair hints.

Classification is driven by an ordered rule file (regular expressions); the
first rule whose pattern matches wins, and anything unmatched is
``Unrecoverable``.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .errors import UnknownCategory


class ErrorCategory(str, enum.Enum):
    COQ_SYNTAX = "CoqSyntax"
    COQ_TYPE = "CoqType"
    COQ_UNRESOLVED_IDENT = "CoqUnresolvedIdent"
    ANNOT_LANG_CONFUSION = "AnnotLangConfusion"
    ANNOT_MALFORMED_CLAUSE = "AnnotMalformedClause"
    ANNOT_BAD_PREDICATE_INSTANTIATION = "AnnotBadPredicateInstantiation"
    PREDICATE_IMPORT = "PredicateImport"
    UNRECOVERABLE = "Unrecoverable"

    def __str__(self):
        return self.value


SOURCES = ("annotation-checker", "coq-checker")


@dataclass(frozen=True)
class Diagnostic:
    source: str
    raw_text: str
    location: tuple | None = None  # (line, column), 1-based

    def to_dict(self) -> dict:
        return {"source": self.source, "raw_text": self.raw_text, "location": list(self.location) if self.location else None}

    @classmethod
    def from_dict(cls, d) -> "Diagnostic":
        loc = d.get("location")
        return cls(d["source"], d["raw_text"], tuple(loc) if loc else None)


@dataclass(frozen=True)
class RepairHint:
    category: ErrorCategory
    pattern_id: str
    guidance_text: str
    example_before: str
    example_after: str

    @property
    def guidance(self) -> str:
        return self.guidance_text


@dataclass(frozen=True)
class Rule:
    rule_id: str
    category: ErrorCategory
    regex: re.Pattern
    source: str | None = None


@dataclass(frozen=True)
class RuleTable:
    version: int
    rules: tuple
    hints: tuple
    default: ErrorCategory = ErrorCategory.UNRECOVERABLE

    @classmethod
    def from_dict(cls, doc: dict) -> "RuleTable":
        try:
            version = int(doc["version"])
            rules = tuple(
                Rule(r["id"], _category(r["category"]), re.compile(r["pattern"], re.M), r.get("source"))
                for r in doc["rules"]
            )
            hints = tuple(
                RepairHint(_category(h["category"]), h["pattern_id"], h["guidance"], h["example_before"], h["example_after"])
                for h in doc["hints"]
            )
        except (KeyError, TypeError, re.error) as err:
            raise UnknownCategory(f"malformed taxonomy file: {err}") from err
        table = cls(version, rules, hints, _category(doc.get("default", "Unrecoverable")))
        table.validate()
        return table

    @classmethod
    def load(cls, path=None) -> "RuleTable":
        if path is None:
            text = resources.files("slspec").joinpath("data", "taxonomy.json").read_text(encoding="utf-8")
        else:
            text = Path(path).read_text(encoding="utf-8")
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as err:
            raise UnknownCategory(f"taxonomy file is not JSON: {err}") from err
        return cls.from_dict(doc)

    def validate(self):
        """Every recoverable category needs at least one hint."""
        covered = {h.category for h in self.hints}
        missing = [c for c in ErrorCategory if c is not ErrorCategory.UNRECOVERABLE and c not in covered]
        if missing:
            raise UnknownCategory("taxonomy has no hints for: " + ", ".join(str(c) for c in missing))
        ids = [h.pattern_id for h in self.hints]
        if len(set(ids)) != len(ids):
            raise UnknownCategory("duplicate hint pattern ids in taxonomy")


def _category(name) -> ErrorCategory:
    try:
        return ErrorCategory(name)
    except ValueError:
        raise UnknownCategory(f"unknown error category {name!r}") from None


@lru_cache(maxsize=1)
def default_rules() -> RuleTable:
    return RuleTable.load()


def _as_text(raw) -> str:
    if isinstance(raw, bytes):
        return raw.decode("utf-8", errors="replace")
    return raw if isinstance(raw, str) else str(raw)


def categorize(d: Diagnostic, rules: RuleTable | None = None) -> ErrorCategory:
    """First matching rule wins; never raises."""
    try:
        rules = rules or default_rules()
        text = _as_text(d.raw_text)
        for r in rules.rules:
            if r.source and r.source != d.source:
                continue
            if r.regex.search(text):
                return r.category
        return rules.default
    except Exception:  # totality: a broken diagnostic is simply unrecoverable
        return ErrorCategory.UNRECOVERABLE


def select_hints(cat: ErrorCategory, k: int, rules: RuleTable | None = None) -> list:
    rules = rules or default_rules()
    cat = _category(cat) if not isinstance(cat, ErrorCategory) else cat
    if cat is ErrorCategory.UNRECOVERABLE or k <= 0:
        return []
    return sorted((h for h in rules.hints if h.category is cat), key=lambda h: h.pattern_id)[:k]


def is_recoverable(cat: ErrorCategory) -> bool:
    return ErrorCategory(cat) is not ErrorCategory.UNRECOVERABLE


def worst_category(cats) -> ErrorCategory | None:
    """Unrecoverable dominates; otherwise the first category seen."""
    cats = list(cats)
    if not cats:
        return None
    if ErrorCategory.UNRECOVERABLE in cats:
        return ErrorCategory.UNRECOVERABLE
    return cats[0]
