"""Command-line front end.

Subcommands mirror the package layers: bank authoring checks, one-off
sandbox runs, provider record/replay, grading, analytics reports, and
the HTTP service. Exit status is 0 for a clean run, 1 when the command
ran but the subject failed (failing verdict, failing self-check), and
2 for usage or environment errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import sandbox
from .analytics import build_summary, emit_report, load_attempts, load_scores, load_survey
from .bank import default_bank_dir, list_tasks, load_bank, self_check
from .errors import PromptGraderError
from .gateway import (
    PROVIDER_REPLAY,
    FixtureStore,
    ProviderConfig,
    TranscriptStore,
    build_envelope,
    default_fixture_dir,
    submit_prompt,
)
from .grading import AttemptStore, GradingEngine


def _fail(message: str, code: int = 2) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _bank(path: str | None):
    return load_bank(Path(path) if path else default_bank_dir())


def _engine(args, provider: ProviderConfig) -> GradingEngine:
    data_dir = Path(args.data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)
    fixtures = None
    if provider.provider_id == PROVIDER_REPLAY:
        fixtures = FixtureStore(
            Path(args.fixtures) if getattr(args, "fixtures", None)
            else default_fixture_dir()
        )
    return GradingEngine(
        bank=_bank(args.bank),
        provider=provider,
        attempts=AttemptStore(data_dir / "attempts.jsonl"),
        transcripts=TranscriptStore(data_dir / "transcripts.jsonl"),
        fixtures=fixtures,
    )


def _print_verdicts(verdicts) -> None:
    for i, v in enumerate(verdicts, start=1):
        line = f"  case {i}: {v.verdict}"
        if v.diagnostics:
            line += f"  ({v.diagnostics.splitlines()[0][:100]})"
        print(line)


# --- bank ---


def cmd_bank_validate(args) -> int:
    bank = _bank(args.dir)
    checks = self_check(bank)
    for check in checks:
        print(f"{check.task_id}: {'ok' if check.passed else 'FAIL'}")
        if not check.passed:
            for report in (check.reference or ()) + (check.eipe or ()):
                if report.verdict != sandbox.PASS:
                    print(f"    {report.case_id}: {report.verdict} "
                          f"{report.diagnostics[:120]}")
    bad = sum(1 for c in checks if not c.passed)
    print(f"{len(checks) - bad}/{len(checks)} tasks pass")
    return 1 if bad else 0


def cmd_bank_list(args) -> int:
    bank = _bank(args.dir)
    for s in list_tasks(bank, lab=args.lab, kind=args.kind):
        print(f"{s.id}\tlab {s.lab}\t{s.kind}\t{s.title}")
    return 0


# --- sandbox ---


def cmd_sandbox_run(args) -> int:
    bank = _bank(args.bank)
    task = bank.get(args.task)
    if task is None:
        return _fail(f"unknown task {args.task!r}")
    if not (1 <= args.case <= len(task.suite)):
        return _fail(f"case must be 1..{len(task.suite)}")
    source = Path(args.code).read_text(encoding="utf-8")
    try:
        prepared = sandbox.prepare_program(source, task.signature)
    except PromptGraderError as exc:
        print(f"CompileError: {exc}")
        return 1
    with prepared:
        result = sandbox.execute_test_case(prepared, task.suite[args.case - 1])
    print(f"{result.verdict}")
    if result.diagnostics:
        print(result.diagnostics)
    print(f"wall {result.resources.wall_ms} ms, cpu {result.resources.cpu_ms} ms")
    return 0 if result.verdict == sandbox.PASS else 1


# --- gateway ---


def cmd_gateway_record(args) -> int:
    from .service import load_config

    config = load_config(args.config)
    if config.provider.provider_id == PROVIDER_REPLAY:
        return _fail("recording needs an http provider in the config")
    bank = _bank(args.bank or config.bank_path)
    task = bank.get(args.task)
    if task is None:
        return _fail(f"unknown task {args.task!r}")
    prompt = Path(args.prompt_file).read_text(encoding="utf-8")
    envelope = build_envelope(prompt, task, config.provider)
    transcripts = TranscriptStore(Path(args.data_dir) / "transcripts.jsonl")
    record = submit_prompt(envelope, config.provider, transcripts=transcripts)
    store = FixtureStore(Path(args.fixtures))
    key = store.put(envelope, record.raw_response, record.model_id)
    print(f"transcript {record.transcript_id}")
    print(f"fixture {key}")
    return 0


def cmd_gateway_replay(args) -> int:
    store = TranscriptStore(Path(args.data_dir) / "transcripts.jsonl")
    record = store.get(args.transcript)
    print(f"provider {record.provider_id} model {record.model_id} "
          f"recorded {record.created_at}")
    print(f"prompt: {record.envelope.student_prompt}")
    print("--- response ---")
    print(record.raw_response)
    return 0


# --- grading ---


def cmd_grade(args) -> int:
    if args.provider != PROVIDER_REPLAY:
        return _fail(f"only {PROVIDER_REPLAY} is supported here; use serve "
                     "with a config for live providers")
    provider = ProviderConfig(provider_id=PROVIDER_REPLAY)
    engine = _engine(args, provider)
    prompt = Path(args.prompt_file).read_text(encoding="utf-8")
    result, attempt = engine.grade_submission(args.student, args.task, prompt)
    print(f"outcome: {result.outcome} (attempt {attempt.seq})")
    if result.extracted_code:
        print("--- extracted code ---")
        print(result.extracted_code)
    _print_verdicts(result.verdicts)
    return 0


def cmd_replay(args) -> int:
    provider = ProviderConfig(provider_id=PROVIDER_REPLAY)
    engine = _engine(args, provider)
    result = engine.replay_transcript(args.transcript, args.task)
    print(f"outcome: {result.outcome}")
    _print_verdicts(result.verdicts)
    return 0


# --- analytics ---


def cmd_report(args) -> int:
    # a fresh store reads as empty, so absent inputs must be caught here
    for label, p in (("attempts", args.attempts), ("survey", args.survey),
                     ("scores", args.scores)):
        if not Path(p).exists():
            return _fail(f"{label} file not found: {p}")
    attempts = load_attempts(args.attempts)
    surveys = load_survey(args.survey)
    scores = load_scores(args.scores)
    bank = _bank(args.bank)
    summary, exclusions = build_summary(attempts, surveys, scores, list(bank))
    text = emit_report(summary, args.format)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    print(f"cohort {summary.cohort_size}, excluded {len(exclusions)}",
          file=sys.stderr)
    return 0


# --- service ---


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app, load_config

    config = load_config(args.config)
    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
    return 0


def cmd_validate_config(args) -> int:
    from .service import load_config

    config = load_config(args.file)
    print(f"listen_address: {config.listen_address}")
    print(f"bank: {config.bank_path or 'packaged default'}")
    print(f"provider: {config.provider.provider_id}")
    print(f"rate limit: {config.rate_max_submissions} per "
          f"{config.rate_window_ms} ms")
    print("config ok")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="promptgrader",
        description="author, deliver, and grade natural-language "
                    "programming tasks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_bank = sub.add_parser("bank", help="task bank checks")
    bank_sub = p_bank.add_subparsers(dest="bank_command", required=True)
    p = bank_sub.add_parser("validate", help="schema + reference oracle check")
    p.add_argument("dir", nargs="?", default=None,
                   help="bank directory (default: packaged bank)")
    p.set_defaults(func=cmd_bank_validate)
    p = bank_sub.add_parser("list", help="list tasks")
    p.add_argument("dir", nargs="?", default=None)
    p.add_argument("--lab", type=int, default=None)
    p.add_argument("--kind", default=None)
    p.set_defaults(func=cmd_bank_list)

    p_sandbox = sub.add_parser("sandbox", help="one-off sandboxed runs")
    sandbox_sub = p_sandbox.add_subparsers(dest="sandbox_command", required=True)
    p = sandbox_sub.add_parser("run", help="run one test case against a file")
    p.add_argument("--code", required=True, help="python source file")
    p.add_argument("--task", required=True)
    p.add_argument("--case", type=int, required=True, help="1-based case index")
    p.add_argument("--bank", default=None)
    p.set_defaults(func=cmd_sandbox_run)

    p_gateway = sub.add_parser("gateway", help="provider record/replay")
    gateway_sub = p_gateway.add_subparsers(dest="gateway_command", required=True)
    p = gateway_sub.add_parser("record", help="call the live provider and "
                                              "store the response as a fixture")
    p.add_argument("--task", required=True)
    p.add_argument("--prompt-file", required=True)
    p.add_argument("--config", required=True, help="service config with an "
                                                   "http provider")
    p.add_argument("--fixtures", required=True, help="fixture directory to "
                                                     "write into")
    p.add_argument("--data-dir", default="data")
    p.add_argument("--bank", default=None)
    p.set_defaults(func=cmd_gateway_record)
    p = gateway_sub.add_parser("replay", help="print a stored transcript")
    p.add_argument("--transcript", required=True)
    p.add_argument("--data-dir", default="data")
    p.set_defaults(func=cmd_gateway_replay)

    p = sub.add_parser("grade", help="grade one prompt end to end")
    p.add_argument("--student", required=True)
    p.add_argument("--task", required=True)
    p.add_argument("--prompt-file", required=True)
    p.add_argument("--provider", default=PROVIDER_REPLAY)
    p.add_argument("--bank", default=None)
    p.add_argument("--fixtures", default=None)
    p.add_argument("--data-dir", default="data")
    p.set_defaults(func=cmd_grade)

    p = sub.add_parser("replay", help="re-grade a stored transcript offline")
    p.add_argument("--transcript", required=True)
    p.add_argument("--task", required=True)
    p.add_argument("--bank", default=None)
    p.add_argument("--fixtures", default=None)
    p.add_argument("--data-dir", default="data")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("report", help="cohort analytics report")
    p.add_argument("--attempts", required=True, help="attempt log (jsonl)")
    p.add_argument("--survey", required=True, help="survey csv")
    p.add_argument("--scores", required=True, help="scores csv")
    p.add_argument("--out", required=True, help="output file, or - for stdout")
    p.add_argument("--format", choices=("csv", "markdown"), default="csv")
    p.add_argument("--bank", default=None)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("serve", help="run the http service")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("validate-config", help="check a service config file")
    p.add_argument("file")
    p.set_defaults(func=cmd_validate_config)

    return parser


def main(argv: list | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PromptGraderError as exc:
        return _fail(str(exc))
    except OSError as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    sys.exit(main())
