"""LLM completion behind one interface, with deterministic record/replay.

Backends expose ``complete(bundle) -> str``:

* ``ReplayBackend``: answers from a cassette; it owns no transport at all.
* ``LiveBackend``: OpenAI-style chat-completion endpoint over HTTP.
* ``RecordBackend``: a live call whose answer is stored in a cassette file.
* ``ScriptedBackend``: answers from a per-stage script (used to author
  cassettes and in tests); optionally records what it served.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path

from .errors import AuthError, CassetteMiss, IOFailure, TransportError

SECTION_TAGS = ("predicate-docs", "few-shot", "error-patterns", "diagnostics", "hints", "task")
CASSETTE_VERSION = 1
DEFAULT_MODEL = "gpt-4o"


@dataclass(frozen=True)
class PromptBundle:
    system_text: str
    sections: tuple  # ((tag, text), ...), order is meaningful
    model: str = DEFAULT_MODEL
    temperature: float = 0.0
    max_tokens: int = 2048
    stage: str = ""

    def __post_init__(self):
        for tag, _ in self.sections:
            if tag not in SECTION_TAGS:
                raise ValueError(f"unknown prompt section tag {tag!r}")

    def user_text(self) -> str:
        return "\n\n".join(f"### {tag}\n{text.rstrip()}" for tag, text in self.sections)

    def section(self, tag: str) -> str | None:
        for t, text in self.sections:
            if t == tag:
                return text
        return None


def _field(out: list, value: str):
    data = value.encode("utf-8")
    out.append(str(len(data)).encode() + b":" + data)


def serialize_prompt(pb: PromptBundle) -> bytes:
    """Length-prefixed concatenation of every field in declaration order."""
    out = []
    _field(out, pb.system_text)
    _field(out, str(len(pb.sections)))
    for tag, text in pb.sections:
        _field(out, tag)
        _field(out, text)
    _field(out, pb.model)
    _field(out, repr(float(pb.temperature)))
    _field(out, str(int(pb.max_tokens)))
    _field(out, pb.stage)
    return b"".join(out)


def hash_prompt(pb: PromptBundle) -> str:
    return hashlib.sha256(serialize_prompt(pb)).hexdigest()


# -- cassettes ------------------------------------------------------------------


@dataclass
class Cassette:
    entries: dict = field(default_factory=dict)  # hash -> {"response", "stage"}
    metadata: dict = field(default_factory=dict)

    def get(self, digest: str) -> str:
        try:
            return self.entries[digest]["response"]
        except KeyError:
            raise CassetteMiss(digest) from None

    def put(self, pb: PromptBundle, response: str):
        digest = hash_prompt(pb)
        old = self.entries.get(digest)
        if old is not None and old["response"] != response:
            raise ValueError(f"conflicting responses recorded for prompt {digest}")
        self.entries[digest] = {"response": response, "stage": pb.stage}

    def to_json(self) -> str:
        doc = {"version": CASSETTE_VERSION, "metadata": self.metadata, "entries": self.entries}
        return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Cassette":
        doc = json.loads(text)
        if doc.get("version") != CASSETTE_VERSION or not isinstance(doc.get("entries"), dict):
            raise ValueError("not a cassette file (bad version or entries)")
        for k, v in doc["entries"].items():
            if not isinstance(v, dict) or not isinstance(v.get("response"), str):
                raise ValueError(f"cassette entry {k} has no response text")
        return cls(dict(doc["entries"]), dict(doc.get("metadata", {})))

    @classmethod
    def load(cls, path) -> "Cassette":
        try:
            return cls.from_json(Path(path).read_text(encoding="utf-8"))
        except OSError as err:
            raise IOFailure(f"cannot read cassette {path}: {err}") from err

    def save(self, path):
        try:
            Path(path).parent.mkdir(parents=True, exist_ok=True)
            Path(path).write_text(self.to_json(), encoding="utf-8")
        except OSError as err:
            raise IOFailure(f"cannot write cassette {path}: {err}") from err


# -- backends -------------------------------------------------------------------


class _Counting:
    def __init__(self):
        self._lock = threading.Lock()
        self.calls = 0

    def _count(self):
        with self._lock:
            self.calls += 1


class ReplayBackend(_Counting):
    """Cassette lookup only; a miss is an error, never a network call."""

    name = "replay"

    def __init__(self, cassette: Cassette):
        super().__init__()
        self.cassette = cassette

    def complete(self, pb: PromptBundle) -> str:
        self._count()
        return self.cassette.get(hash_prompt(pb))


class LiveBackend(_Counting):
    name = "live"

    def __init__(self, endpoint: str, api_key: str | None = None, timeout: float = 120.0, client=None):
        super().__init__()
        self.endpoint = endpoint
        self.api_key = api_key if api_key is not None else os.environ.get("SLSPEC_LLM_API_KEY")
        self.timeout = timeout
        self._client = client

    def complete(self, pb: PromptBundle) -> str:
        import httpx

        self._count()
        body = {
            "model": pb.model,
            "temperature": pb.temperature,
            "max_tokens": pb.max_tokens,
            "messages": [
                {"role": "system", "content": pb.system_text},
                {"role": "user", "content": pb.user_text()},
            ],
        }
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        try:
            if self._client is not None:
                resp = self._client.post(self.endpoint, json=body, headers=headers, timeout=self.timeout)
            else:
                resp = httpx.post(self.endpoint, json=body, headers=headers, timeout=self.timeout)
        except httpx.HTTPError as err:
            raise TransportError(f"request to {self.endpoint} failed: {err}") from err
        if resp.status_code in (401, 403):
            raise AuthError(f"endpoint rejected credentials (HTTP {resp.status_code})")
        if resp.status_code >= 400:
            raise TransportError(f"endpoint answered HTTP {resp.status_code}")
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as err:
            raise TransportError(f"unexpected response shape: {err}") from err


class RecordBackend(_Counting):
    """Delegate to ``inner`` and persist every answer to ``path``."""

    name = "record"

    def __init__(self, inner, path, cassette: Cassette | None = None):
        super().__init__()
        self.inner = inner
        self.path = Path(path)
        if cassette is None:
            cassette = Cassette.load(self.path) if self.path.exists() else Cassette()
        self.cassette = cassette
        self._write_lock = threading.Lock()

    def complete(self, pb: PromptBundle) -> str:
        self._count()
        text = self.inner.complete(pb)
        with self._write_lock:
            self.cassette.put(pb, text)
            self.cassette.save(self.path)
        return text


class ScriptedBackend(_Counting):
    """Serve scripted answers per stage, in order, recording each exchange.

    ``script`` maps a stage name to a list of responses.  Running out of
    responses for a stage raises CassetteMiss, like a replay miss would.
    """

    name = "scripted"

    def __init__(self, script: dict, metadata: dict | None = None):
        super().__init__()
        self._queues = {k: list(v) for k, v in script.items()}
        self.cassette = Cassette(metadata=dict(metadata or {}))
        self.log = []  # (stage, hash)
        self._lock = threading.Lock()

    def complete(self, pb: PromptBundle) -> str:
        self._count()
        digest = hash_prompt(pb)
        with self._lock:
            queue = self._queues.get(pb.stage)
            if not queue:
                raise CassetteMiss(digest)
            text = queue.pop(0)
            self.cassette.put(pb, text)
            self.log.append((pb.stage, digest))
        return text

    def unused(self) -> dict:
        return {k: v for k, v in self._queues.items() if v}


class MultiCassetteBackend(ReplayBackend):
    """Replay from the union of several cassettes."""

    def __init__(self, cassettes):
        merged = Cassette()
        for c in cassettes:
            merged.entries.update(c.entries)
        super().__init__(merged)


def backend_from_env(cassette_path=None):
    """Replay when a cassette path is given, else Live from SLSPEC_LLM_URL."""
    if cassette_path:
        return ReplayBackend(Cassette.load(cassette_path))
    url = os.environ.get("SLSPEC_LLM_URL")
    if not url:
        raise TransportError("no cassette given and SLSPEC_LLM_URL is not set")
    return LiveBackend(url)
