"""Exception hierarchy shared by every subsystem."""

from __future__ import annotations


class SlspecError(Exception):
    """Base class for all domain errors raised by this package."""


# -- annotation language ----------------------------------------------------


class AnnotSyntaxError(SlspecError):
    """Malformed annotation text.

    ``position`` is a character offset into the text handed to the parser
    (for whole files this is a file offset); ``line``/``column`` are 1-based.
    """

    def __init__(self, message, position=0, expected=(), found="", line=None, column=None):
        self.position = position
        self.expected = tuple(sorted(set(expected)))
        self.found = found
        self.line = line
        self.column = column
        super().__init__(message)

    def located(self, text: str, offset: int = 0) -> "AnnotSyntaxError":
        """Return a copy whose position/line/column refer to ``text``."""
        pos = self.position + offset
        line = text.count("\n", 0, pos) + 1
        col = pos - (text.rfind("\n", 0, pos) + 1) + 1
        return AnnotSyntaxError(str(self), pos, self.expected, self.found, line, col)


class SortError(SlspecError):
    def __init__(self, term, expected, found, message=None):
        self.term = term
        self.expected = expected
        self.found = found
        super().__init__(message or f"sort mismatch in {term}: expected {expected} but found {found}")


class SignatureNotFound(SlspecError):
    pass


class NameCollision(SlspecError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"Extern Coq name already declared: {name}")


class UnsupportedType(SlspecError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"unsupported C type: {name}")


# -- logic core -------------------------------------------------------------


class UnboundVar(SlspecError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"unbound variable: {name}")


class FuelExhausted(SlspecError):
    pass


class EvalError(SlspecError):
    """Run-time failure of a well-parsed term (wrong constructor, division by zero)."""


class DuplicateDef(SlspecError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"function already defined: {name}")


class ShapeMismatch(SlspecError):
    pass


# -- examples / refutation --------------------------------------------------


class OracleParseFailure(SlspecError):
    def __init__(self, stage, attempts, last_error):
        self.stage = stage
        self.attempts = attempts
        self.last_error = last_error
        super().__init__(f"{stage}: oracle response unusable after {attempts} attempt(s): {last_error}")


class SortMismatch(SlspecError):
    def __init__(self, name, expected, found):
        self.name = name
        self.expected = expected
        self.found = found
        super().__init__(f"example value for {name!r} has sort {found}, signature expects {expected}")


class SanityCheckFailure(SlspecError):
    def __init__(self, violations):
        self.violations = list(violations)
        kinds = ", ".join(sorted({v.kind for v in self.violations}))
        super().__init__(f"refutation case failed sanity checks: {kinds}")

    @property
    def kind(self):
        return self.violations[0].kind if self.violations else None


class UnboundSpecVariable(SlspecError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"logical variable {name!r} is not determined by any input")


class BackendIOFailure(SlspecError):
    pass


# -- diagnostics / oracle ---------------------------------------------------


class UnknownCategory(SlspecError):
    pass


class CassetteMiss(SlspecError):
    def __init__(self, digest):
        self.digest = digest
        super().__init__(f"no cassette entry for prompt hash {digest}")


class TransportError(SlspecError):
    pass


class AuthError(SlspecError):
    pass


# -- pipeline / bench -------------------------------------------------------


class GenerationParseFailure(SlspecError):
    pass


class RefineParseFailure(SlspecError):
    pass


class UnrecoverableDiagnostic(SlspecError):
    pass


class IOFailure(SlspecError):
    pass


class SchemaError(SlspecError):
    def __init__(self, record_id, field, detail=""):
        self.record_id = record_id
        self.field = field
        super().__init__(f"record {record_id!r}: invalid {field}" + (f" ({detail})" if detail else ""))


class DuplicateId(SlspecError):
    def __init__(self, record_id):
        self.record_id = record_id
        super().__init__(f"duplicate problem id: {record_id}")


class UnknownSymbol(SortError):
    """A function or predicate name with no declaration in scope."""

    def __init__(self, name, kind="function"):
        self.name = name
        self.kind = kind
        super().__init__(name, f"declared {kind}", "unknown", f"unknown {kind} {name!r}")


class ArityError(SlspecError):
    def __init__(self, name, expected, got, kind="predicate"):
        self.name = name
        self.expected = expected
        self.got = got
        self.kind = kind
        super().__init__(f"{kind} '{name}' expects {expected} arguments but got {got}")
