"""Restricted C declaration parsing and the C-type to logic-shape mapping."""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import SignatureNotFound, UnsupportedType
from .ast import FunctionSignature

_NOT_FUNCTIONS = {"if", "while", "for", "switch", "return", "sizeof", "do", "else"}

# return-type+name ( params )   -- params may not nest parentheses
_DECL_RE = re.compile(r"(?P<head>[A-Za-z_][\w \t\*]*?[\s\*])(?P<name>[A-Za-z_]\w*)\s*\((?P<params>[^()]*)\)")


def normalize_ctype(text: str) -> str:
    """``const struct list *`` -> ``struct list*``."""
    stars = text.count("*")
    words = [w for w in text.replace("*", " ").split() if w not in ("const", "volatile", "restrict")]
    return " ".join(words) + "*" * stars


def _split_decl(text: str) -> tuple[str, str]:
    m = re.fullmatch(r"\s*(.*?[\s\*])([A-Za-z_]\w*)\s*", text, re.S)
    if not m:
        raise SignatureNotFound(f"cannot read parameter declaration {text.strip()!r}")
    return normalize_ctype(m.group(1)), m.group(2)


def parse_signature_text(text: str) -> FunctionSignature:
    """Parse one prototype such as ``int f(int x)`` (trailing ``;`` allowed)."""
    m = _DECL_RE.search(text)
    if not m:
        raise SignatureNotFound(f"no function declaration in {text.strip()!r}")
    return _from_match(m)


def _from_match(m) -> FunctionSignature:
    ret = normalize_ctype(m.group("head"))
    params_text = m.group("params").strip()
    params = []
    if params_text and params_text != "void":
        for chunk in params_text.split(","):
            params.append(_split_decl(chunk))
    names = [n for _, n in params]
    if len(set(names)) != len(names):
        raise SignatureNotFound(f"duplicate parameter names in {m.group(0)!r}")
    return FunctionSignature(ret, m.group("name"), tuple(params))


def blank_comments(text: str) -> str:
    """Replace comments, string/char literals and preprocessor lines with
    spaces, preserving offsets and newlines."""
    out = list(text)
    i, n = 0, len(text)

    def blank(a, b):
        for k in range(a, b):
            if out[k] != "\n":
                out[k] = " "

    line_start = True
    while i < n:
        c = text[i]
        if line_start and text[i:].lstrip(" \t").startswith("#"):
            j = text.find("\n", i)
            j = n if j < 0 else j
            blank(i, j)
            i = j
            continue
        line_start = False
        if text.startswith("/*", i):
            j = text.find("*/", i + 2)
            j = n if j < 0 else j + 2
            blank(i, j)
            i = j
        elif text.startswith("//", i):
            j = text.find("\n", i)
            j = n if j < 0 else j
            blank(i, j)
            i = j
        elif c in "\"'":
            j = i + 1
            while j < n and text[j] != c:
                j += 2 if text[j] == "\\" else 1
            blank(i, min(j + 1, n))
            i = j + 1
        else:
            if c == "\n":
                line_start = True
            i += 1
    return "".join(out)


@dataclass(frozen=True)
class DeclSite:
    signature: FunctionSignature
    start: int  # offset of the return type
    end: int  # offset just past ')'


def find_declarations(text: str) -> list[DeclSite]:
    """Top-level function declarations/definitions (brace depth 0)."""
    clean = blank_comments(text)
    depth = 0
    depth_at = []
    for ch in clean:
        depth_at.append(depth)
        if ch == "{":
            depth += 1
        elif ch == "}":
            depth = max(0, depth - 1)
    sites = []
    for m in _DECL_RE.finditer(clean):
        if depth_at[m.start()] != 0 or m.group("name") in _NOT_FUNCTIONS:
            continue
        head_words = m.group("head").replace("*", " ").split()
        if not head_words or head_words[-1] in _NOT_FUNCTIONS or "return" in head_words:
            continue
        try:
            sig = _from_match(m)
        except SignatureNotFound:
            continue
        start = m.start("head") + (len(m.group("head")) - len(m.group("head").lstrip()))
        sites.append(DeclSite(sig, start, m.end()))
    return sites


# -- C type -> logic shape --------------------------------------------------

SCALAR_TYPES = {"int", "long", "long long", "short", "unsigned", "unsigned int", "char", "bool", "long int"}
LIST_STRUCTS = {"struct ListNode*", "struct list*"}
TREE_STRUCTS = {"struct TreeNode*", "struct tree*"}
OUT_SIZE_NAMES = {"returnSize", "returnColumnSizes"}


@dataclass(frozen=True)
class ParamShape:
    """How one C-level value is laid out and which logical sort it carries.

    ``shape`` is one of ``scalar``, ``sll``, ``tree``, ``int-array``,
    ``char-array``, ``length`` (array length companion), ``out-size``
    (multi-output size pointer) or ``void``.
    """

    name: str
    c_type: str
    shape: str
    sort: str
    length_param: str | None = None
    length_of: str | None = None
    value_range: tuple | None = None

    @property
    def is_pointer(self) -> bool:
        return self.shape in ("sll", "tree", "int-array", "char-array")


@dataclass(frozen=True)
class ShapeMapping:
    signature: FunctionSignature
    params: tuple  # ParamShape per C parameter, in order
    result: ParamShape

    def param(self, name: str) -> ParamShape:
        for p in self.params:
            if p.name == name:
                return p
        raise KeyError(name)

    @property
    def inputs(self) -> tuple:
        """Parameters an example must supply (length companions are derived)."""
        return tuple(p for p in self.params if p.shape not in ("length", "out-size"))

    @property
    def multi_output(self) -> bool:
        return any(p.shape == "out-size" for p in self.params) or self.result.shape == "int-array"

    @property
    def data_structures(self) -> frozenset:
        tags = set()
        for p in self.params + (self.result,):
            tags |= _TAGS.get(p.shape, set())
        return frozenset(tags)


_TAGS = {
    "scalar": {"integer"},
    "length": {"integer"},
    "int-array": {"array"},
    "char-array": {"string"},
    "tree": {"tree"},
    "sll": {"linked-list"},
}

LENGTH_SUFFIXES = ("Size", "Len", "Length")
LENGTH_NAMES = ("n", "len", "size", "length")


def _scalar_or_raise(ctype: str, name: str) -> ParamShape:
    if ctype in SCALAR_TYPES:
        rng = (0, 1) if ctype == "bool" else None
        return ParamShape(name, ctype, "scalar", "bool" if ctype == "bool" else "Z", value_range=rng)
    raise UnsupportedType(ctype)


def transform_signature(sig: FunctionSignature | str) -> ShapeMapping:
    """Map C parameter/return types to logic shapes.

    ``struct TreeNode*`` becomes a ``tree``, ``struct ListNode*``/``struct
    list*`` an ``sll`` list, ``bool`` an integer in {0, 1}, ``char*`` a
    character list, ``int*`` followed by a length parameter an integer array,
    and scalar integers ``Z``.  Anything else raises UnsupportedType.
    """
    if isinstance(sig, str):
        sig = parse_signature_text(sig)
    shapes = []
    params = list(sig.params)
    i = 0
    while i < len(params):
        ctype, name = params[i]
        nxt = params[i + 1] if i + 1 < len(params) else None
        if name in OUT_SIZE_NAMES and ctype.endswith("*"):
            shapes.append(ParamShape(name, ctype, "out-size", "Z"))
        elif ctype in LIST_STRUCTS:
            shapes.append(ParamShape(name, ctype, "sll", "list Z"))
        elif ctype in TREE_STRUCTS:
            shapes.append(ParamShape(name, ctype, "tree", "tree"))
        elif ctype in ("int*", "char*"):
            shape, sort = ("int-array", "list Z") if ctype == "int*" else ("char-array", "string")
            if nxt and nxt[0] in SCALAR_TYPES and _is_length_name(nxt[1], name):
                shapes.append(ParamShape(name, ctype, shape, sort, length_param=nxt[1]))
                shapes.append(ParamShape(nxt[1], nxt[0], "length", "Z", length_of=name))
                i += 1
            elif ctype == "char*":
                shapes.append(ParamShape(name, ctype, shape, sort))
            else:
                raise UnsupportedType(f"{ctype} without a length parameter")
        else:
            shapes.append(_scalar_or_raise(ctype, name))
        i += 1
    rt = sig.return_type
    if rt == "void":
        result = ParamShape("__return", rt, "void", "unit")
    elif rt in LIST_STRUCTS:
        result = ParamShape("__return", rt, "sll", "list Z")
    elif rt in TREE_STRUCTS:
        result = ParamShape("__return", rt, "tree", "tree")
    elif rt == "char*":
        result = ParamShape("__return", rt, "char-array", "string")
    elif rt == "int*":
        result = ParamShape("__return", rt, "int-array", "list Z")
    else:
        result = _scalar_or_raise(rt, "__return")
    return ShapeMapping(sig, tuple(shapes), result)


def _is_length_name(candidate: str, array: str) -> bool:
    return candidate in LENGTH_NAMES or any(candidate == array + s for s in LENGTH_SUFFIXES)


def logic_sort_of_ctype(ctype: str) -> str:
    """Sort of a C-level program variable inside annotations."""
    if ctype.endswith("*"):
        return "ptr"
    if ctype == "void":
        return "unit"
    return "Z"
