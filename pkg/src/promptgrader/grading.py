"""End-to-end grading: prompt in, verdicts out, attempt persisted.

The pipeline is envelope -> provider -> extraction -> prepare -> suite,
with each stage's failure mapped to an attempt outcome instead of an
exception. Attempts land in an append-only JSONL log whose per
(student, task) sequence numbers stay gapless even across concurrent
writer processes: sequence assignment and the appending write happen
under one file lock, records are written with a single write call and
fsynced, and a writer that finds a torn final line (a crashed
predecessor) truncates it before continuing.
"""

from __future__ import annotations

import fcntl
import json
import os
import threading
import time
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterator

from . import sandbox
from .bank import TaskBank
from .errors import (
    CompileError,
    MockMiss,
    NoCodeFound,
    ProviderError,
    ProviderTimeout,
    SchemaViolation,
    SequenceConflict,
    SignatureMismatch,
    StorageError,
    UnknownTask,
)
from .gateway import (
    FixtureStore,
    ProviderConfig,
    TranscriptStore,
    build_envelope,
    extract_code,
    submit_prompt,
)

OUTCOME_SUCCESS = "Success"
OUTCOME_TEST_FAILURE = "TestFailure"
OUTCOME_COMPILE_ERROR = "CompileError"
OUTCOME_EXTRACTION_FAILURE = "ExtractionFailure"
OUTCOME_PROVIDER_FAILURE = "ProviderFailure"

ATTEMPT_OUTCOMES = (
    OUTCOME_SUCCESS,
    OUTCOME_TEST_FAILURE,
    OUTCOME_COMPILE_ERROR,
    OUTCOME_EXTRACTION_FAILURE,
    OUTCOME_PROVIDER_FAILURE,
)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass(frozen=True)
class Attempt:
    attempt_id: str
    student_id: str
    task_id: str
    seq: int
    prompt: str
    transcript_id: str | None
    verdicts: tuple
    outcome: str
    created_at: str

    def validate(self) -> None:
        if not self.attempt_id or not self.student_id or not self.task_id:
            raise SchemaViolation("attempt ids must be non-empty")
        if self.seq < 1:
            raise SchemaViolation("seq must be >= 1")
        if self.outcome not in ATTEMPT_OUTCOMES:
            raise SchemaViolation(f"unknown outcome {self.outcome!r}")
        succeeded = bool(self.verdicts) and all(
            v.verdict == sandbox.PASS for v in self.verdicts
        )
        if (self.outcome == OUTCOME_SUCCESS) != succeeded:
            raise SchemaViolation("outcome disagrees with verdicts")

    def to_json(self) -> dict:
        return {
            "attempt_id": self.attempt_id,
            "student_id": self.student_id,
            "task_id": self.task_id,
            "seq": self.seq,
            "prompt": self.prompt,
            "transcript_id": self.transcript_id,
            "verdicts": [v.to_json() for v in self.verdicts],
            "outcome": self.outcome,
            "created_at": self.created_at,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Attempt":
        if not isinstance(obj, dict):
            raise SchemaViolation(f"malformed attempt: {obj!r}")
        return cls(
            attempt_id=obj.get("attempt_id", ""),
            student_id=obj.get("student_id", ""),
            task_id=obj.get("task_id", ""),
            seq=int(obj.get("seq", 0)),
            prompt=obj.get("prompt", ""),
            transcript_id=obj.get("transcript_id"),
            verdicts=tuple(
                sandbox.ExecutionResult.from_json(v) for v in obj.get("verdicts") or []
            ),
            outcome=obj.get("outcome", ""),
            created_at=obj.get("created_at", ""),
        )


@dataclass(frozen=True)
class GradeResult:
    extracted_code: str | None
    verdicts: tuple
    outcome: str
    generated_code_shown: bool = True

    def __post_init__(self) -> None:
        if self.extracted_code is None and self.outcome not in (
            OUTCOME_EXTRACTION_FAILURE,
            OUTCOME_PROVIDER_FAILURE,
        ):
            raise SchemaViolation("missing code implies an extraction/provider failure")


@dataclass(frozen=True)
class TaskStatus:
    attempt_count: int
    first_attempt_success: bool
    ever_succeeded: bool
    attempts_to_first_success: int | None


class AttemptStore:
    """Append-only attempt log with gapless per-pair sequence numbers.

    A sidecar lock file serializes writers across processes. The index
    (max seq per pair) is rebuilt incrementally by tailing the log from
    the last synced offset, so opening an existing store is cheap.
    """

    def __init__(self, path: str | Path, durable: bool = True):
        self.path = Path(path)
        self.durable = durable
        self._max_seq: dict[tuple[str, str], int] = {}
        self._offset = 0
        self._mutex = threading.Lock()
        self.path.parent.mkdir(parents=True, exist_ok=True)

    # -- internals --

    def _lockfile(self):
        fd = os.open(str(self.path) + ".lock", os.O_WRONLY | os.O_CREAT, 0o644)
        fcntl.flock(fd, fcntl.LOCK_EX)
        return fd

    def _repair_torn_tail(self, fd: int) -> int:
        """Drop a partial final line left by a crashed writer."""
        size = os.fstat(fd).st_size
        if size == 0:
            return 0
        os.lseek(fd, size - 1, os.SEEK_SET)
        if os.read(fd, 1) == b"\n":
            return size
        # walk back to the last newline; small reads are fine here
        # because torn tails are at most one record long
        pos = size - 1
        while pos > 0:
            os.lseek(fd, pos - 1, os.SEEK_SET)
            if os.read(fd, 1) == b"\n":
                break
            pos -= 1
        os.ftruncate(fd, pos)
        return pos

    def _sync(self) -> None:
        """Fold any log lines appended since the last sync into the index."""
        if not self.path.exists():
            return
        size = self.path.stat().st_size
        if size < self._offset:
            # the log shrank (torn-tail repair by another writer): rebuild
            self._offset = 0
            self._max_seq.clear()
            size = self.path.stat().st_size
        if size == self._offset:
            return
        with open(self.path, "rb") as fh:
            fh.seek(self._offset)
            data = fh.read(size - self._offset)
        end = data.rfind(b"\n")
        if end < 0:
            return
        for line in data[: end + 1].splitlines():
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise StorageError(f"{self.path}: corrupt attempt line ({exc})")
            key = (doc.get("student_id", ""), doc.get("task_id", ""))
            seq = int(doc.get("seq", 0))
            if seq > self._max_seq.get(key, 0):
                self._max_seq[key] = seq
        self._offset += end + 1

    def _write_locked(self, attempt: Attempt, fd: int) -> None:
        line = (
            json.dumps(attempt.to_json(), sort_keys=True, ensure_ascii=False) + "\n"
        ).encode("utf-8")
        # O_RDWR: the torn-tail check reads the last byte before appending
        data_fd = os.open(self.path, os.O_RDWR | os.O_APPEND | os.O_CREAT, 0o644)
        try:
            self._repair_torn_tail(data_fd)
            os.write(data_fd, line)
            if self.durable:
                os.fsync(data_fd)
        finally:
            os.close(data_fd)
        key = (attempt.student_id, attempt.task_id)
        self._max_seq[key] = max(self._max_seq.get(key, 0), attempt.seq)

    # -- public API --

    def next_seq(self, student_id: str, task_id: str) -> int:
        with self._mutex:
            self._sync()
            return self._max_seq.get((student_id, task_id), 0) + 1

    def append_next(self, build: Callable[[int], Attempt]) -> Attempt:
        """Assign the next seq and append, atomically across processes."""
        with self._mutex:
            fd = self._lockfile()
            try:
                self._sync()
                attempt = build(0)  # probe for the pair key
                key = (attempt.student_id, attempt.task_id)
                attempt = build(self._max_seq.get(key, 0) + 1)
                attempt.validate()
                self._write_locked(attempt, fd)
                return attempt
            finally:
                fcntl.flock(fd, fcntl.LOCK_UN)
                os.close(fd)

    def record_attempt(self, attempt: Attempt) -> str:
        """Append a caller-sequenced attempt; gapless or SequenceConflict."""
        attempt.validate()
        with self._mutex:
            fd = self._lockfile()
            try:
                key = (attempt.student_id, attempt.task_id)
                want = attempt.seq
                self._sync()
                if self._max_seq.get(key, 0) + 1 != want:
                    # one internal retry against freshly synced state
                    self._offset = 0
                    self._max_seq.clear()
                    self._sync()
                    if self._max_seq.get(key, 0) + 1 != want:
                        raise SequenceConflict(
                            f"seq {want} is not next for {key}"
                        )
                self._write_locked(attempt, fd)
                return attempt.attempt_id
            finally:
                fcntl.flock(fd, fcntl.LOCK_UN)
                os.close(fd)

    def __iter__(self) -> Iterator[Attempt]:
        if not self.path.exists():
            return
        with open(self.path, "rb") as fh:
            data = fh.read()
        end = data.rfind(b"\n")
        if end < 0:
            return
        for n, line in enumerate(data[: end + 1].splitlines(), start=1):
            if not line.strip():
                continue
            try:
                yield Attempt.from_json(json.loads(line))
            except (json.JSONDecodeError, SchemaViolation) as exc:
                raise StorageError(f"{self.path}:{n}: bad attempt ({exc})")

    def attempts_for(self, student_id: str, task_id: str) -> list[Attempt]:
        rows = [
            a for a in self if a.student_id == student_id and a.task_id == task_id
        ]
        rows.sort(key=lambda a: a.seq)
        return rows


class RateLimiter:
    """Sliding-window submission limit per key (default: one per 5 s)."""

    def __init__(self, window_ms: int = 5000, max_submissions: int = 1):
        if window_ms < 0 or max_submissions < 1:
            raise ValueError("window_ms must be >= 0, max_submissions >= 1")
        self.window_ms = window_ms
        self.max_submissions = max_submissions
        self._accepted: dict[str, list[float]] = {}
        self._mutex = threading.Lock()

    def check(self, key: str, now: float | None = None) -> tuple[bool, int]:
        """Returns (allowed, retry_after_ms); accepting updates the window."""
        t = time.monotonic() if now is None else now
        window = self.window_ms / 1000.0
        with self._mutex:
            times = [x for x in self._accepted.get(key, []) if t - x < window]
            if len(times) >= self.max_submissions:
                wait = window - (t - times[0])
                self._accepted[key] = times
                return False, int(wait * 1000.0) + 1
            times.append(t)
            self._accepted[key] = times
            return True, 0


@dataclass
class GradingEngine:
    """Binds a task bank, a provider, and the two persistence stores."""

    bank: TaskBank
    provider: ProviderConfig
    attempts: AttemptStore
    transcripts: TranscriptStore
    fixtures: FixtureStore | None = None
    limits: sandbox.ResourceLimits = field(default_factory=sandbox.ResourceLimits)

    def _task(self, task_id: str):
        task = self.bank.get(task_id)
        if task is None:
            raise UnknownTask(task_id)
        return task

    def _grade_response(self, task, raw_response: str) -> GradeResult:
        try:
            code = extract_code(raw_response)
        except NoCodeFound:
            return GradeResult(None, (), OUTCOME_EXTRACTION_FAILURE)
        try:
            prepared = sandbox.prepare_program(code, task.signature)
        except (CompileError, SignatureMismatch):
            return GradeResult(code, (), OUTCOME_COMPILE_ERROR)
        with prepared:
            results = tuple(sandbox.run_suite(prepared, task.suite, self.limits))
        outcome = (
            OUTCOME_SUCCESS
            if all(r.verdict == sandbox.PASS for r in results)
            else OUTCOME_TEST_FAILURE
        )
        return GradeResult(code, results, outcome)

    def grade_submission(
        self, student_id: str, task_id: str, prompt: str
    ) -> tuple[GradeResult, Attempt]:
        """Run the full pipeline and persist exactly one attempt."""
        task = self._task(task_id)
        envelope = build_envelope(prompt, task, self.provider)
        transcript_id: str | None = None
        try:
            record = submit_prompt(
                envelope, self.provider, fixtures=self.fixtures,
                transcripts=self.transcripts,
            )
        except (ProviderTimeout, ProviderError, MockMiss):
            result = GradeResult(None, (), OUTCOME_PROVIDER_FAILURE)
        else:
            transcript_id = record.transcript_id
            result = self._grade_response(task, record.raw_response)

        def build(seq: int) -> Attempt:
            return Attempt(
                attempt_id=uuid.uuid4().hex,
                student_id=student_id,
                task_id=task_id,
                seq=max(seq, 1),
                prompt=prompt,
                transcript_id=transcript_id,
                verdicts=result.verdicts,
                outcome=result.outcome,
                created_at=_now(),
            )

        attempt = self.attempts.append_next(build)
        return result, attempt

    def replay_transcript(self, transcript_id: str, task_id: str) -> GradeResult:
        """Re-grade a stored response offline; no attempt is persisted."""
        task = self._task(task_id)
        record = self.transcripts.get(transcript_id)
        return self._grade_response(task, record.raw_response)

    def student_task_status(self, student_id: str, task_id: str) -> TaskStatus:
        rows = self.attempts.attempts_for(student_id, task_id)
        first = any(a.seq == 1 and a.outcome == OUTCOME_SUCCESS for a in rows)
        winners = [a.seq for a in rows if a.outcome == OUTCOME_SUCCESS]
        return TaskStatus(
            attempt_count=len(rows),
            first_attempt_success=first,
            ever_succeeded=bool(winners),
            attempts_to_first_success=min(winners) if winners else None,
        )
