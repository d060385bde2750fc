"""HTTP surface: task delivery, attempt submission, history, and reports.

Authentication is two shared bearer tokens per deployment (student and
instructor scope). Task bodies are redacted for students: reference
solutions never leave the process and hidden test cases expose their
verdict but not their inputs. The bank is validated on boot so a broken
deployment refuses to start instead of mis-grading.
"""

from __future__ import annotations

import hmac
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Header
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel

from . import sandbox
from .analytics import build_summary, emit_report, load_scores, load_survey
from .bank import (
    KIND_EIPE,
    KIND_PROMPT_PROBLEM,
    TaskSpec,
    default_bank_dir,
    list_tasks,
    load_bank,
    self_check,
)
from .errors import EmptyPrompt, ParseError, SchemaViolation
from .gateway import (
    PROVIDER_REPLAY,
    FixtureStore,
    ProviderConfig,
    TranscriptStore,
    default_fixture_dir,
)
from .grading import AttemptStore, GradingEngine, RateLimiter
from .values import value_to_json

SCOPE_STUDENT = "student"
SCOPE_INSTRUCTOR = "instructor"


@dataclass(frozen=True)
class ServiceConfig:
    data_dir: str
    student_token: str
    instructor_token: str
    listen_address: str = "127.0.0.1:8000"
    bank_path: str | None = None
    provider: ProviderConfig = field(
        default_factory=lambda: ProviderConfig(provider_id=PROVIDER_REPLAY)
    )
    limits: sandbox.ResourceLimits = field(default_factory=sandbox.ResourceLimits)
    rate_window_ms: int = 5000
    rate_max_submissions: int = 1
    validate_bank_on_boot: bool = True

    def __post_init__(self) -> None:
        if not self.student_token or not self.instructor_token:
            raise SchemaViolation("both bearer tokens must be non-empty")
        if self.student_token == self.instructor_token:
            raise SchemaViolation("student and instructor tokens must differ")
        host, _, port = self.listen_address.rpartition(":")
        if not host or not port.isdigit() or not (0 < int(port) < 65536):
            raise SchemaViolation(f"bad listen_address {self.listen_address!r}")

    @property
    def host(self) -> str:
        return self.listen_address.rpartition(":")[0]

    @property
    def port(self) -> int:
        return int(self.listen_address.rpartition(":")[2])

    @classmethod
    def from_json(cls, obj: dict) -> "ServiceConfig":
        if not isinstance(obj, dict):
            raise SchemaViolation(f"malformed service config: {obj!r}")
        known = {
            "data_dir", "tokens", "listen_address", "bank_path", "provider",
            "limits", "rate_limit", "validate_bank_on_boot",
        }
        extra = set(obj) - known
        if extra:
            raise SchemaViolation(f"unknown service config keys: {sorted(extra)}")
        if "data_dir" not in obj:
            raise SchemaViolation("service config needs data_dir")
        tokens = obj.get("tokens") or {}
        if set(tokens) - {"student", "instructor"}:
            raise SchemaViolation("tokens accepts only student and instructor")
        kwargs: dict = {
            "data_dir": obj["data_dir"],
            "student_token": tokens.get("student", ""),
            "instructor_token": tokens.get("instructor", ""),
        }
        if "listen_address" in obj:
            kwargs["listen_address"] = obj["listen_address"]
        if obj.get("bank_path") is not None:
            kwargs["bank_path"] = obj["bank_path"]
        if "provider" in obj:
            kwargs["provider"] = ProviderConfig.from_json(obj["provider"])
        if "limits" in obj:
            lim = obj["limits"]
            if not isinstance(lim, dict):
                raise SchemaViolation("limits must be an object")
            try:
                kwargs["limits"] = sandbox.ResourceLimits(**lim)
            except TypeError as exc:
                raise SchemaViolation(f"bad limits: {exc}")
        if "rate_limit" in obj:
            rl = obj["rate_limit"]
            if not isinstance(rl, dict) or set(rl) - {"window_ms",
                                                      "max_submissions"}:
                raise SchemaViolation("rate_limit takes window_ms and "
                                      "max_submissions")
            kwargs["rate_window_ms"] = int(rl.get("window_ms", 5000))
            kwargs["rate_max_submissions"] = int(rl.get("max_submissions", 1))
        if "validate_bank_on_boot" in obj:
            kwargs["validate_bank_on_boot"] = bool(obj["validate_bank_on_boot"])
        return cls(**kwargs)


def load_config(path: str | Path) -> ServiceConfig:
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}: {exc.msg}")
    return ServiceConfig.from_json(doc)


# --- redacted views ---


def task_summary_view(summary) -> dict:
    return {"id": summary.id, "lab": summary.lab, "kind": summary.kind,
            "title": summary.title}


def task_detail_view(task: TaskSpec) -> dict:
    """Student-facing body: no reference solution, no hidden-case data."""
    cases = []
    for case in task.suite:
        row: dict = {"case_id": case.case_id, "hidden": case.hidden}
        if not case.hidden:
            row["inputs"] = [value_to_json(k, v) for k, v in case.inputs]
            row["expected"] = value_to_json(*case.expected)
        cases.append(row)
    view = {
        "id": task.id,
        "lab": task.lab,
        "ordinal": task.ordinal,
        "kind": task.kind,
        "title": task.title,
        "statement": task.statement,
        "signature": task.signature.to_json(),
        "cases": cases,
    }
    if task.kind == KIND_EIPE:
        view["eipe_source"] = task.eipe_source
    if task.kind == KIND_PROMPT_PROBLEM and task.visual_spec is not None:
        view["visual"] = {
            "exemplars": [
                {"inputs": [value_to_json(k, v) for k, v in ex.inputs],
                 "output": value_to_json(*ex.output)}
                for ex in task.visual_spec.exemplars
            ],
            "illustration": task.visual_spec.illustration,
        }
    return view


def _observed_json(observed) -> object:
    # decoded wire values are plain ints/reals/strings/lists already
    if hasattr(observed, "text"):
        return {"raw": observed.text}
    return observed


def verdict_rows(task: TaskSpec, verdicts: tuple) -> list:
    """Positional per-case rows; hidden cases carry the verdict only."""
    rows = []
    for case, result in zip(task.suite, verdicts):
        row: dict = {"case_id": case.case_id, "verdict": result.verdict,
                     "hidden": case.hidden}
        if not case.hidden:
            row["expected"] = value_to_json(*case.expected)
            row["observed"] = _observed_json(result.observed)
            row["diagnostics"] = result.diagnostics
        rows.append(row)
    return rows


def attempt_response(task: TaskSpec, result, attempt) -> dict:
    return {
        "attempt_id": attempt.attempt_id,
        "seq": attempt.seq,
        "outcome": result.outcome,
        "extracted_code": result.extracted_code,
        "generated_code_shown": result.generated_code_shown,
        "verdicts": verdict_rows(task, result.verdicts),
        "created_at": attempt.created_at,
    }


# --- the application ---


class SubmitRequest(BaseModel):
    student_id: str
    task_id: str
    prompt: str


def create_app(config: ServiceConfig) -> FastAPI:
    data_dir = Path(config.data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)
    probe = data_dir / ".write-probe"
    try:
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise SchemaViolation(f"data_dir {data_dir} is not writable: {exc}")

    bank_dir = Path(config.bank_path) if config.bank_path else default_bank_dir()
    bank = load_bank(bank_dir)
    if config.validate_bank_on_boot:
        failures = [c.task_id for c in self_check(bank, config.limits)
                    if not c.passed]
        if failures:
            raise SchemaViolation(
                f"bank failed its self-check: {', '.join(sorted(failures))}"
            )

    fixtures = None
    if config.provider.provider_id == PROVIDER_REPLAY:
        fixtures = FixtureStore(
            Path(config.provider.fixture_dir)
            if config.provider.fixture_dir else default_fixture_dir()
        )
    engine = GradingEngine(
        bank=bank,
        provider=config.provider,
        attempts=AttemptStore(data_dir / "attempts.jsonl"),
        transcripts=TranscriptStore(data_dir / "transcripts.jsonl"),
        fixtures=fixtures,
        limits=config.limits,
    )
    limiter = RateLimiter(config.rate_window_ms, config.rate_max_submissions)

    app = FastAPI(title="prompt grading service", docs_url=None, redoc_url=None)
    app.state.engine = engine
    app.state.config = config

    def scope_of(authorization: str | None) -> str | None:
        if not authorization or not authorization.startswith("Bearer "):
            return None
        token = authorization[len("Bearer "):]
        if hmac.compare_digest(token, config.instructor_token):
            return SCOPE_INSTRUCTOR
        if hmac.compare_digest(token, config.student_token):
            return SCOPE_STUDENT
        return None

    def deny(status: int, message: str) -> JSONResponse:
        return JSONResponse(status_code=status, content={"detail": message})

    @app.get("/tasks")
    def get_tasks(lab: int | None = None, kind: str | None = None,
                  authorization: str | None = Header(default=None)):
        if scope_of(authorization) is None:
            return deny(401, "missing or invalid token")
        rows = list_tasks(bank, lab=lab, kind=kind)
        return [task_summary_view(s) for s in rows]

    @app.get("/tasks/{task_id}")
    def get_task(task_id: str,
                 authorization: str | None = Header(default=None)):
        if scope_of(authorization) is None:
            return deny(401, "missing or invalid token")
        task = bank.get(task_id)
        if task is None:
            return deny(404, f"unknown task {task_id!r}")
        return task_detail_view(task)

    @app.post("/attempts")
    def post_attempt(body: SubmitRequest,
                     authorization: str | None = Header(default=None)):
        if scope_of(authorization) is None:
            return deny(401, "missing or invalid token")
        task = bank.get(body.task_id)
        if task is None:
            return deny(404, f"unknown task {body.task_id!r}")
        if not body.student_id.strip():
            return deny(422, "student_id must be non-empty")
        allowed, retry_ms = limiter.check(body.student_id)
        if not allowed:
            return JSONResponse(
                status_code=429,
                content={"detail": "rate limit exceeded",
                         "retry_after_ms": retry_ms},
                headers={"Retry-After": str(math.ceil(retry_ms / 1000))},
            )
        try:
            result, attempt = engine.grade_submission(
                body.student_id, body.task_id, body.prompt
            )
        except EmptyPrompt as exc:
            return deny(422, str(exc))
        payload = attempt_response(task, result, attempt)
        if result.outcome == "ProviderFailure":
            payload["detail"] = "provider unavailable; attempt recorded"
            return JSONResponse(status_code=502, content=payload)
        return payload

    @app.get("/students/{student_id}/tasks/{task_id}/attempts")
    def get_history(student_id: str, task_id: str,
                    authorization: str | None = Header(default=None)):
        if scope_of(authorization) is None:
            return deny(401, "missing or invalid token")
        if bank.get(task_id) is None:
            return deny(404, f"unknown task {task_id!r}")
        rows = engine.attempts.attempts_for(student_id, task_id)
        return [
            {"attempt_id": a.attempt_id, "seq": a.seq, "outcome": a.outcome,
             "prompt": a.prompt, "created_at": a.created_at}
            for a in rows
        ]

    @app.get("/report")
    def get_report(format: str = "csv",
                   authorization: str | None = Header(default=None)):
        scope = scope_of(authorization)
        if scope is None:
            return deny(401, "missing or invalid token")
        if scope != SCOPE_INSTRUCTOR:
            return deny(403, "report requires the instructor token")
        if format not in ("csv", "markdown"):
            return deny(422, f"unknown format {format!r}")
        survey_path = data_dir / "survey.csv"
        scores_path = data_dir / "scores.csv"
        surveys = load_survey(survey_path) if survey_path.exists() else []
        scores = load_scores(scores_path) if scores_path.exists() else []
        summary, _ = build_summary(
            list(engine.attempts), surveys, scores, list(bank)
        )
        text = emit_report(summary, format)
        media = "text/csv" if format == "csv" else "text/markdown"
        return PlainTextResponse(text, media_type=media)

    return app
