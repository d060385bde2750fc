"""Prompt submission: envelope building, providers, extraction, transcripts.

A student's prompt is wrapped verbatim in a code-only meta-prompt and
sent to a provider. Providers are pluggable: `http_provider` talks to a
chat-completions endpoint, `replay_mock` answers from a fixture store so
grading runs offline and deterministically. Every submission produces a
TranscriptRecord whose id is a content hash over the envelope and the
raw response, which makes replay self-verifying.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import time
import warnings
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib.resources import files
from pathlib import Path
from typing import Any, Iterator

import httpx

from .errors import (
    EmptyPrompt,
    MockMiss,
    NoCodeFound,
    ProviderError,
    ProviderTimeout,
    SchemaViolation,
    StorageError,
    UnknownTranscript,
)
from .values import Signature

PROVIDER_REPLAY = "replay_mock"
PROVIDER_HTTP = "http_provider"
TARGET_LANGUAGE = "python"

_KIND_WORDS = {
    "int": "an integer",
    "real": "a real number",
    "str": "a string",
    "bool": "a true/false value",
    "int_array": "an array of integers",
    "real_array": "an array of real numbers",
    "int_matrix": "a 2D array of integers",
    "positions": "a list of (row, column) pairs",
}


@dataclass(frozen=True)
class PromptEnvelope:
    system_instruction: str
    student_prompt: str
    target_language: str
    signature_hint: Signature | None = None

    def to_json(self) -> dict:
        return {
            "system_instruction": self.system_instruction,
            "student_prompt": self.student_prompt,
            "target_language": self.target_language,
            "signature_hint": (
                self.signature_hint.to_json() if self.signature_hint else None
            ),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PromptEnvelope":
        if not isinstance(obj, dict):
            raise SchemaViolation(f"malformed envelope: {obj!r}")
        hint = obj.get("signature_hint")
        return cls(
            system_instruction=obj.get("system_instruction", ""),
            student_prompt=obj.get("student_prompt", ""),
            target_language=obj.get("target_language", ""),
            signature_hint=Signature.from_json(hint) if hint else None,
        )


@dataclass(frozen=True)
class ProviderConfig:
    provider_id: str
    endpoint: str | None = None
    credentials_ref: str | None = None
    timeout_ms: int = 30000
    max_response_bytes: int = 262144
    model_id: str = "replay"
    fixture_dir: str | None = None

    def __post_init__(self) -> None:
        if self.provider_id not in (PROVIDER_REPLAY, PROVIDER_HTTP):
            raise SchemaViolation(f"unknown provider {self.provider_id!r}")
        if self.timeout_ms <= 0 or self.max_response_bytes <= 0:
            raise SchemaViolation("timeout_ms and max_response_bytes must be positive")
        if self.provider_id == PROVIDER_REPLAY:
            if self.endpoint or self.credentials_ref:
                raise SchemaViolation(
                    "replay_mock takes no endpoint or credentials"
                )
        else:
            if not self.endpoint or not self.credentials_ref:
                raise SchemaViolation(
                    "http_provider needs endpoint and credentials_ref"
                )

    @classmethod
    def from_json(cls, obj: dict) -> "ProviderConfig":
        if not isinstance(obj, dict):
            raise SchemaViolation(f"malformed provider config: {obj!r}")
        known = {
            "provider_id", "endpoint", "credentials_ref", "timeout_ms",
            "max_response_bytes", "model_id", "fixture_dir",
        }
        extra = set(obj) - known
        if extra:
            raise SchemaViolation(f"unknown provider config keys: {sorted(extra)}")
        return cls(**obj)


@dataclass(frozen=True)
class TranscriptRecord:
    transcript_id: str
    envelope: PromptEnvelope
    raw_response: str
    provider_id: str
    model_id: str
    created_at: str
    latency_ms: int
    truncated: bool = False
    request_params: dict = field(default_factory=dict)

    def verify(self) -> bool:
        return self.transcript_id == transcript_id_for(self.envelope, self.raw_response)

    def to_json(self) -> dict:
        return {
            "transcript_id": self.transcript_id,
            "envelope": self.envelope.to_json(),
            "raw_response": self.raw_response,
            "provider_id": self.provider_id,
            "model_id": self.model_id,
            "created_at": self.created_at,
            "latency_ms": self.latency_ms,
            "truncated": self.truncated,
            "request_params": self.request_params,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TranscriptRecord":
        if not isinstance(obj, dict):
            raise SchemaViolation(f"malformed transcript: {obj!r}")
        latency = obj.get("latency_ms", 0)
        if not isinstance(latency, int) or latency < 0:
            raise SchemaViolation("latency_ms must be an integer >= 0")
        return cls(
            transcript_id=obj.get("transcript_id", ""),
            envelope=PromptEnvelope.from_json(obj.get("envelope")),
            raw_response=obj.get("raw_response", ""),
            provider_id=obj.get("provider_id", ""),
            model_id=obj.get("model_id", ""),
            created_at=obj.get("created_at", ""),
            latency_ms=latency,
            truncated=bool(obj.get("truncated", False)),
            request_params=obj.get("request_params") or {},
        )


def transcript_id_for(envelope: PromptEnvelope, raw_response: str) -> str:
    payload = json.dumps(
        {"envelope": envelope.to_json(), "raw_response": raw_response},
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _signature_phrase(sig: Signature) -> str:
    count = len(sig.param_kinds)
    noun = "parameter" if count == 1 else "parameters"
    kinds = ", ".join(_KIND_WORDS[k] for k in sig.param_kinds)
    result = _KIND_WORDS[sig.result_kind]
    if count == 0:
        return f"named {sig.name} that takes no parameters and returns {result}"
    return f"named {sig.name} that takes {count} {noun} ({kinds}) and returns {result}"


def build_envelope(
    student_prompt: str, task: Any, config: ProviderConfig
) -> PromptEnvelope:
    """Wrap the prompt verbatim in the code-only meta-prompt."""
    if not student_prompt.strip():
        raise EmptyPrompt("prompt is empty after trimming whitespace")
    sig = task.signature
    system = (
        f"You write {TARGET_LANGUAGE} code only. Reply with a single complete "
        f"{TARGET_LANGUAGE} function {_signature_phrase(sig)}. Implement exactly "
        "the behavior in the user's description. No commentary, no usage "
        "examples, no text outside the code."
    )
    return PromptEnvelope(
        system_instruction=system,
        student_prompt=student_prompt,
        target_language=TARGET_LANGUAGE,
        signature_hint=sig,
    )


# --- fixture store (record/replay) ---


def normalize_prompt(prompt: str) -> str:
    """Collapse internal whitespace runs; case is preserved."""
    return " ".join(prompt.split())


def fixture_key(signature_hint: Signature | None, student_prompt: str) -> str:
    payload = json.dumps(
        {
            "signature": signature_hint.to_json() if signature_hint else None,
            "prompt": normalize_prompt(student_prompt),
        },
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class FixtureStore:
    """Directory of recorded responses keyed by content hash.

    index.json maps key -> fixture file; lookups are exact-match only.
    A miss must surface as MockMiss, never as a fuzzy fallback.
    """

    INDEX_NAME = "index.json"

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._index: dict[str, str] | None = None

    def _load_index(self) -> dict[str, str]:
        if self._index is None:
            path = self.root / self.INDEX_NAME
            if not path.exists():
                self._index = {}
            else:
                try:
                    doc = json.loads(path.read_text(encoding="utf-8"))
                except (OSError, json.JSONDecodeError) as exc:
                    raise StorageError(f"fixture index unreadable: {exc}")
                entries = doc.get("entries")
                if not isinstance(entries, dict):
                    raise StorageError("fixture index needs an entries object")
                self._index = dict(entries)
        return self._index

    def lookup(self, envelope: PromptEnvelope) -> tuple[str, str]:
        """Return (raw_response, model_id) for an exact key match."""
        key = fixture_key(envelope.signature_hint, envelope.student_prompt)
        index = self._load_index()
        name = index.get(key)
        if name is None:
            raise MockMiss(
                f"no recording for prompt {normalize_prompt(envelope.student_prompt)[:80]!r}"
            )
        try:
            doc = json.loads((self.root / name).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise StorageError(f"fixture {name} unreadable: {exc}")
        return doc.get("raw_response", ""), doc.get("model_id", "replay")

    def put(self, envelope: PromptEnvelope, raw_response: str, model_id: str) -> str:
        """Record a response; returns the fixture key."""
        key = fixture_key(envelope.signature_hint, envelope.student_prompt)
        self.root.mkdir(parents=True, exist_ok=True)
        name = f"fixture-{key[:16]}.json"
        doc = {
            "key": key,
            "prompt": normalize_prompt(envelope.student_prompt),
            "signature": (
                envelope.signature_hint.to_json() if envelope.signature_hint else None
            ),
            "raw_response": raw_response,
            "model_id": model_id,
        }
        (self.root / name).write_text(
            json.dumps(doc, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
        )
        index = dict(self._load_index())
        index[key] = name
        tmp = self.root / (self.INDEX_NAME + ".tmp")
        tmp.write_text(
            json.dumps({"entries": index}, indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        tmp.replace(self.root / self.INDEX_NAME)
        self._index = index
        return key


def lookup_mock(envelope: PromptEnvelope, store: FixtureStore) -> str:
    raw, _ = store.lookup(envelope)
    return raw


def default_fixture_dir() -> Path:
    return Path(str(files("promptgrader") / "fixtures" / "demo"))


# --- transcript store ---


class TranscriptStore:
    """Append-only JSONL, one TranscriptRecord per line."""

    def __init__(self, path: str | Path, durable: bool = True):
        self.path = Path(path)
        self.durable = durable

    def append(self, record: TranscriptRecord) -> None:
        line = (
            json.dumps(record.to_json(), sort_keys=True, ensure_ascii=False) + "\n"
        ).encode("utf-8")
        self.path.parent.mkdir(parents=True, exist_ok=True)
        fd = os.open(self.path, os.O_WRONLY | os.O_APPEND | os.O_CREAT, 0o644)
        try:
            os.write(fd, line)
            if self.durable:
                os.fsync(fd)
        finally:
            os.close(fd)

    def __iter__(self) -> Iterator[TranscriptRecord]:
        if not self.path.exists():
            return
        with open(self.path, encoding="utf-8") as fh:
            for n, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    yield TranscriptRecord.from_json(json.loads(line))
                except (json.JSONDecodeError, SchemaViolation) as exc:
                    raise StorageError(f"{self.path}:{n}: bad transcript ({exc})")

    def get(self, transcript_id: str) -> TranscriptRecord:
        for record in self:
            if record.transcript_id == transcript_id:
                if not record.verify():
                    raise StorageError(
                        f"transcript {transcript_id} fails its content check"
                    )
                return record
        raise UnknownTranscript(transcript_id)


# --- providers ---


def _truncate(text: str, max_bytes: int) -> tuple[str, bool]:
    raw = text.encode("utf-8")
    if len(raw) <= max_bytes:
        return text, False
    return raw[:max_bytes].decode("utf-8", errors="ignore"), True


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _call_http(envelope: PromptEnvelope, config: ProviderConfig) -> tuple[str, int, dict]:
    key = os.environ.get(config.credentials_ref or "")
    if not key:
        raise ProviderError(
            f"environment variable {config.credentials_ref!r} holds no credential"
        )
    params = {"temperature": 0}
    body = {
        "model": config.model_id,
        "messages": [
            {"role": "system", "content": envelope.system_instruction},
            {"role": "user", "content": envelope.student_prompt},
        ],
        **params,
    }
    started = time.monotonic()
    try:
        resp = httpx.post(
            config.endpoint,
            json=body,
            headers={"Authorization": f"Bearer {key}"},
            timeout=config.timeout_ms / 1000.0,
        )
    except (httpx.TimeoutException, httpx.ConnectError) as exc:
        raise ProviderTimeout(f"provider unreachable: {exc}")
    except httpx.HTTPError as exc:
        raise ProviderError(f"transport failure: {exc}")
    latency_ms = int((time.monotonic() - started) * 1000)
    if resp.status_code // 100 != 2:
        raise ProviderError(
            f"provider returned {resp.status_code}",
            status=resp.status_code,
            body=resp.text[:2000],
        )
    try:
        text = resp.json()["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError, ValueError):
        raise ProviderError("malformed provider response", body=resp.text[:2000])
    if not isinstance(text, str):
        raise ProviderError("provider response content is not text")
    return text, latency_ms, params


def submit_prompt(
    envelope: PromptEnvelope,
    config: ProviderConfig,
    fixtures: FixtureStore | None = None,
    transcripts: TranscriptStore | None = None,
) -> TranscriptRecord:
    """Send the envelope to its provider; optionally persist the transcript."""
    if config.provider_id == PROVIDER_REPLAY:
        store = fixtures or FixtureStore(config.fixture_dir or default_fixture_dir())
        raw, model_id = store.lookup(envelope)
        latency_ms = 0
        params: dict = {}
    else:
        raw, latency_ms, params = _call_http(envelope, config)
        model_id = config.model_id
    raw, truncated = _truncate(raw, config.max_response_bytes)
    record = TranscriptRecord(
        transcript_id=transcript_id_for(envelope, raw),
        envelope=envelope,
        raw_response=raw,
        provider_id=config.provider_id,
        model_id=model_id,
        created_at=_now(),
        latency_ms=latency_ms,
        truncated=truncated,
        request_params=params,
    )
    if transcripts is not None:
        transcripts.append(record)
    return record


# --- code extraction ---

_FENCE_OPEN = re.compile(r"^\s*```")
_CODEISH = re.compile(r"^\s*(def |class |import |from |@|#)")
_WINDOW_SCAN_LIMIT = 300


def _compiles(text: str) -> bool:
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            compile(text, "<response>", "exec")
        return True
    except (SyntaxError, ValueError, MemoryError, RecursionError):
        return False


def _trim_blank_edges(lines: list[str]) -> list[str]:
    start, end = 0, len(lines)
    while start < end and not lines[start].strip():
        start += 1
    while end > start and not lines[end - 1].strip():
        end -= 1
    return lines[start:end]


def _fenced_blocks(lines: list[str]) -> list[str]:
    blocks: list[str] = []
    i = 0
    while i < len(lines):
        if _FENCE_OPEN.match(lines[i]):
            j = i + 1
            body: list[str] = []
            while j < len(lines) and not _FENCE_OPEN.match(lines[j]):
                body.append(lines[j])
                j += 1
            blocks.append("\n".join(_trim_blank_edges(body)))
            i = j + 1
        else:
            i += 1
    return [b for b in blocks if b.strip()]


def extract_code(raw_response: str) -> str:
    """Pull program text out of a model response.

    Fenced blocks win when their concatenation compiles; otherwise the
    largest contiguous run of lines that compiles (ties break leftmost).
    Deterministic, and idempotent on its own output.
    """
    lines = raw_response.splitlines()
    blocks = _fenced_blocks(lines)
    if blocks:
        candidate = "\n\n".join(blocks)
        if _compiles(candidate):
            return candidate
    body = [line for line in lines if not _FENCE_OPEN.match(line)]
    n = len(body)
    # Long responses only get windows that start at a code-looking line;
    # short ones are scanned exhaustively.
    unrestricted = n <= _WINDOW_SCAN_LIMIT
    for size in range(n, 0, -1):
        for start in range(0, n - size + 1):
            window = body[start : start + size]
            if not window[0].strip():
                continue
            if not unrestricted and not _CODEISH.match(window[0]):
                continue
            candidate = "\n".join(_trim_blank_edges(window))
            if not candidate.strip():
                continue
            if _compiles(candidate):
                return candidate
    raise NoCodeFound("response holds no syntax-valid program text")
