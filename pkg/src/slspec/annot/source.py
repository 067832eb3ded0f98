"""Annotated C sources: locating ``/*@ ... */`` blocks and rewriting imports."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import AnnotSyntaxError, NameCollision, SignatureNotFound
from .ast import EXTERN_COQ, FUNC_SPEC, INV_ASSERT, AnnotationBlock, FunctionSignature
from .parser import parse_extern, parse_funcspec, parse_inv
from .render import render_annotation, render_extern
from .signature import find_declarations


@dataclass(frozen=True)
class AnnotatedSource:
    raw_text: str
    annotations: tuple  # AnnotationBlock, in file order
    signature: FunctionSignature
    signature_span: tuple

    @property
    def externs(self) -> tuple:
        return tuple(d for b in self.annotations if b.kind == EXTERN_COQ for d in b.payload)

    @property
    def funcspec_block(self) -> AnnotationBlock | None:
        specs = [b for b in self.annotations if b.kind == FUNC_SPEC]
        after = [b for b in specs if b.span[0] >= self.signature_span[1]]
        if after:
            return after[0]
        return specs[0] if specs else None

    @property
    def funcspec(self):
        block = self.funcspec_block
        return block.payload if block else None

    def blocks(self, kind: str) -> tuple:
        return tuple(b for b in self.annotations if b.kind == kind)

    def structure(self) -> tuple:
        """What parse-equality compares: signature plus (kind, payload) list."""
        return (self.signature, tuple((b.kind, b.payload) for b in self.annotations))


def parse_equal(a: AnnotatedSource, b: AnnotatedSource) -> bool:
    return a.structure() == b.structure()


def _annotation_spans(text: str):
    """Yield (start, end) of every ``/*@ ... */`` comment, skipping ordinary
    comments and string literals."""
    i, n = 0, len(text)
    while i < n:
        if text.startswith("/*", i):
            j = text.find("*/", i + 2)
            if j < 0:
                if text.startswith("/*@", i):
                    raise AnnotSyntaxError("unterminated annotation comment", i, {"'*/'"}, "end of file").located(text)
                return
            if text.startswith("/*@", i):
                yield i, j + 2
            i = j + 2
        elif text.startswith("//", i):
            j = text.find("\n", i)
            i = n if j < 0 else j
        elif text[i] in "\"'":
            q, j = text[i], i + 1
            while j < n and text[j] != q:
                j += 2 if text[j] == "\\" else 1
            i = j + 1
        else:
            i += 1


def parse_block(comment: str, start: int = 0, file_text: str | None = None) -> AnnotationBlock:
    """Parse a single ``/*@ ... */`` comment."""
    if not (comment.startswith("/*@") and comment.endswith("*/")):
        raise AnnotSyntaxError("not an annotation comment", start, {"'/*@'"}, comment[:3])
    payload = comment[3:-2]
    first = payload.split(None, 1)[0] if payload.strip() else ""
    try:
        if first == "Extern":
            kind, value = EXTERN_COQ, parse_extern(payload)
        elif first in ("With", "Require"):
            kind, value = FUNC_SPEC, parse_funcspec(payload)
        elif first == "Inv":
            kind, value = INV_ASSERT, parse_inv(payload)
        else:
            lead = len(payload) - len(payload.lstrip())
            raise AnnotSyntaxError(
                f"expected 'Extern', 'With', 'Require' or 'Inv' but found {first or 'end of annotation'!r}",
                lead,
                {"'Extern'", "'With'", "'Require'", "'Inv'"},
                first,
            )
    except AnnotSyntaxError as err:
        base = file_text if file_text is not None else comment
        raise AnnotSyntaxError(str(err), err.position, err.expected, err.found).located(base, start + 3)
    return AnnotationBlock(kind, value, (start, start + len(comment)), comment)


def parse_annotated_source(text: str, target: str | None = None) -> AnnotatedSource:
    """Parse every annotation of a C file and locate the target signature.

    Function bodies are kept verbatim; only top-level declarations are read.
    """
    blocks = tuple(parse_block(text[s:e], s, text) for s, e in _annotation_spans(text))
    sites = find_declarations(text)
    if target is not None:
        sites = [s for s in sites if s.signature.name == target]
    if not sites:
        raise SignatureNotFound(f"no declaration of {target!r}" if target else "no function declaration found")
    site = sites[0]
    return AnnotatedSource(text, blocks, site.signature, (site.start, site.end))


def render_source(src: AnnotatedSource, canonical: bool = False) -> str:
    """Splice block texts back at their spans.

    With ``canonical=False`` this reproduces ``raw_text`` exactly; with
    ``canonical=True`` every block is re-printed in canonical form.
    """
    out, pos = [], 0
    text = src.raw_text
    for b in src.annotations:
        s, e = b.span
        out.append(text[pos:s])
        if canonical:
            line_start = text.rfind("\n", 0, s) + 1
            indent = text[line_start:s] if not text[line_start:s].strip() else ""
            out.append(render_annotation(b, indent))
        else:
            out.append(b.text)
        pos = e
    out.append(text[pos:])
    return "".join(out)


def strip_imports(src: AnnotatedSource) -> AnnotatedSource:
    """Remove every ``Extern Coq`` block (whole line when it stands alone)."""
    text = src.raw_text
    cuts = []
    for b in src.annotations:
        if b.kind != EXTERN_COQ:
            continue
        s, e = b.span
        ls = text.rfind("\n", 0, s) + 1
        le = text.find("\n", e)
        le_full = len(text) if le < 0 else le + 1
        if not text[ls:s].strip() and not text[e:le_full].strip():
            cuts.append((ls, le_full))
        else:
            cuts.append((s, e))
    if not cuts:
        return src
    out, pos = [], 0
    for s, e in cuts:
        out.append(text[pos:s])
        pos = e
    out.append(text[pos:])
    return parse_annotated_source("".join(out), src.signature.name)


def insert_imports(src: AnnotatedSource, decls) -> AnnotatedSource:
    """Add one ``Extern Coq`` line per declaration just above the target."""
    decls = list(decls)
    if not decls:
        return src
    seen = {d.name for d in src.externs}
    for d in decls:
        if d.name in seen:
            raise NameCollision(d.name)
        seen.add(d.name)
    text = src.raw_text
    at = text.rfind("\n", 0, src.signature_span[0]) + 1
    lines = "".join(f"/*@ Extern Coq {render_extern(d)} */\n" for d in decls)
    return parse_annotated_source(text[:at] + lines + text[at:], src.signature.name)
