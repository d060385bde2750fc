import json
import multiprocessing
import os
import threading

import pytest

from promptgrader.errors import (
    EmptyPrompt,
    SequenceConflict,
    StorageError,
    UnknownTask,
)
from promptgrader.grading import (
    ATTEMPT_OUTCOMES,
    OUTCOME_COMPILE_ERROR,
    OUTCOME_EXTRACTION_FAILURE,
    OUTCOME_PROVIDER_FAILURE,
    OUTCOME_SUCCESS,
    OUTCOME_TEST_FAILURE,
    Attempt,
    AttemptStore,
    GradeResult,
    RateLimiter,
)

TS = "2026-03-01T10:00:00+00:00"


def make_attempt(seq, student="s1", task="lab10-q1", outcome=OUTCOME_PROVIDER_FAILURE,
                 **kw):
    return Attempt(
        attempt_id=f"{student}-{task}-{seq}",
        student_id=student,
        task_id=task,
        seq=seq,
        prompt="reverse it",
        transcript_id=None,
        verdicts=(),
        outcome=outcome,
        created_at=TS,
        **kw,
    )


class TestAttemptModel:
    def test_roundtrip(self):
        a = make_attempt(1)
        a.validate()
        assert Attempt.from_json(a.to_json()) == a

    def test_success_requires_all_pass_verdicts(self):
        bad = make_attempt(1, outcome=OUTCOME_SUCCESS)
        with pytest.raises(Exception):
            bad.validate()

    def test_seq_must_be_positive(self):
        with pytest.raises(Exception):
            make_attempt(0).validate()

    def test_unknown_outcome(self):
        with pytest.raises(Exception):
            make_attempt(1, outcome="Shrug").validate()

    def test_outcome_vocabulary_is_closed(self):
        assert set(ATTEMPT_OUTCOMES) == {
            OUTCOME_SUCCESS, OUTCOME_TEST_FAILURE, OUTCOME_COMPILE_ERROR,
            OUTCOME_EXTRACTION_FAILURE, OUTCOME_PROVIDER_FAILURE,
        }


class TestGradeResultShape:
    def test_missing_code_limits_outcomes(self):
        GradeResult(None, (), OUTCOME_PROVIDER_FAILURE)
        GradeResult(None, (), OUTCOME_EXTRACTION_FAILURE)
        with pytest.raises(Exception):
            GradeResult(None, (), OUTCOME_TEST_FAILURE)


class TestAttemptStore:
    def test_seq_starts_at_one_per_pair(self, tmp_path):
        store = AttemptStore(tmp_path / "a.jsonl", durable=False)
        assert store.next_seq("s1", "t1") == 1
        store.record_attempt(make_attempt(1, "s1", "t1"))
        assert store.next_seq("s1", "t1") == 2
        assert store.next_seq("s2", "t1") == 1

    def test_record_rejects_gaps_and_duplicates(self, tmp_path):
        store = AttemptStore(tmp_path / "a.jsonl", durable=False)
        store.record_attempt(make_attempt(1))
        with pytest.raises(SequenceConflict):
            store.record_attempt(make_attempt(1))
        with pytest.raises(SequenceConflict):
            store.record_attempt(make_attempt(3))

    def test_append_next_assigns_contiguous_seq(self, tmp_path):
        store = AttemptStore(tmp_path / "a.jsonl", durable=False)
        for want in (1, 2, 3):
            got = store.append_next(lambda seq: make_attempt(max(seq, 1)))
            assert got.seq == want

    def test_two_handles_on_one_file_stay_gapless(self, tmp_path):
        path = tmp_path / "a.jsonl"
        s1 = AttemptStore(path, durable=False)
        s2 = AttemptStore(path, durable=False)
        s1.record_attempt(make_attempt(1))
        s2.record_attempt(make_attempt(2))
        s1.record_attempt(make_attempt(3))
        assert [a.seq for a in s1.attempts_for("s1", "lab10-q1")] == [1, 2, 3]

    def test_iteration_skips_unterminated_tail(self, tmp_path):
        path = tmp_path / "a.jsonl"
        store = AttemptStore(path, durable=False)
        store.record_attempt(make_attempt(1))
        with open(path, "ab") as fh:
            fh.write(b'{"attempt_id": "torn')
        assert len(list(AttemptStore(path, durable=False))) == 1

    def test_torn_tail_repaired_before_next_append(self, tmp_path):
        path = tmp_path / "a.jsonl"
        store = AttemptStore(path, durable=False)
        store.record_attempt(make_attempt(1))
        with open(path, "ab") as fh:
            fh.write(b'{"attempt_id": "torn')
        fresh = AttemptStore(path, durable=False)
        fresh.record_attempt(make_attempt(2))
        rows = [json.loads(l) for l in path.read_bytes().splitlines()]
        assert [r["seq"] for r in rows] == [1, 2]
        assert path.read_bytes().endswith(b"\n")

    def test_corrupt_interior_line_is_storage_error(self, tmp_path):
        path = tmp_path / "a.jsonl"
        store = AttemptStore(path, durable=False)
        store.record_attempt(make_attempt(1))
        store.record_attempt(make_attempt(2))
        lines = path.read_bytes().splitlines(keepends=True)
        path.write_bytes(b"this is not json\n" + lines[1])
        with pytest.raises(StorageError):
            list(AttemptStore(path, durable=False))

    def test_shrunk_file_triggers_full_rebuild(self, tmp_path):
        path = tmp_path / "a.jsonl"
        store = AttemptStore(path, durable=False)
        for i in (1, 2, 3):
            store.record_attempt(make_attempt(i))
        lines = path.read_bytes().splitlines(keepends=True)
        path.write_bytes(b"".join(lines[:1]))
        assert store.next_seq("s1", "lab10-q1") == 2

    def test_threaded_appends_are_gapless(self, tmp_path):
        store = AttemptStore(tmp_path / "a.jsonl", durable=False)

        def work():
            for _ in range(10):
                store.append_next(lambda seq: make_attempt(max(seq, 1)))

        threads = [threading.Thread(target=work) for _ in range(4)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        seqs = [a.seq for a in store.attempts_for("s1", "lab10-q1")]
        assert seqs == list(range(1, 41))

    def test_multiprocess_appends_are_gapless(self, tmp_path):
        path = tmp_path / "a.jsonl"
        procs = [
            multiprocessing.Process(target=_worker_append, args=(str(path), 10))
            for _ in range(4)
        ]
        for p in procs:
            p.start()
        for p in procs:
            p.join()
        assert all(p.exitcode == 0 for p in procs)
        store = AttemptStore(path, durable=False)
        seqs = [a.seq for a in store.attempts_for("s1", "lab10-q1")]
        assert seqs == list(range(1, 41))


def _worker_append(path, count):
    store = AttemptStore(path, durable=False)
    for _ in range(count):
        store.append_next(lambda seq: make_attempt(max(seq, 1)))


class TestRateLimiter:
    def test_first_submission_allowed_then_blocked(self):
        rl = RateLimiter(window_ms=5000, max_submissions=1)
        ok, retry = rl.check("s1:t1", now=100.0)
        assert ok and retry == 0
        ok, retry = rl.check("s1:t1", now=101.0)
        assert not ok
        # never under-reports: strictly covers the 4000 ms remaining
        assert 4000 <= retry <= 4001

    def test_window_expiry_reopens(self):
        rl = RateLimiter(window_ms=5000, max_submissions=1)
        assert rl.check("k", now=100.0)[0]
        assert rl.check("k", now=105.0)[0]

    def test_keys_are_independent(self):
        rl = RateLimiter(window_ms=5000, max_submissions=1)
        assert rl.check("s1:t1", now=0.0)[0]
        assert rl.check("s1:t2", now=0.0)[0]
        assert rl.check("s2:t1", now=0.0)[0]

    def test_burst_budget(self):
        rl = RateLimiter(window_ms=1000, max_submissions=3)
        times = [0.0, 0.1, 0.2]
        assert all(rl.check("k", now=t)[0] for t in times)
        ok, retry = rl.check("k", now=0.3)
        assert not ok and 700 <= retry <= 701

    def test_rejected_attempt_does_not_extend_the_window(self):
        rl = RateLimiter(window_ms=1000, max_submissions=1)
        assert rl.check("k", now=0.0)[0]
        assert not rl.check("k", now=0.5)[0]
        assert rl.check("k", now=1.0)[0]


class TestEngine:
    PROMPTS = {
        "reverses a string": OUTCOME_SUCCESS,
        "takes a string and turns it backwards": OUTCOME_TEST_FAILURE,
    }

    def test_success_and_failure_paths(self, engine):
        for prompt, want in self.PROMPTS.items():
            result, attempt = engine.grade_submission("s1", "lab10-q1", prompt)
            assert result.outcome == want
            assert attempt.outcome == want
            assert attempt.transcript_id is not None
            assert result.extracted_code.strip()
            assert len(result.verdicts) == len(engine.bank.get("lab10-q1").suite)

    def test_seq_increments_per_student_task(self, engine):
        _, a1 = engine.grade_submission("s1", "lab10-q1", "reverses a string")
        _, a2 = engine.grade_submission("s1", "lab10-q1", "reverses a string")
        _, b1 = engine.grade_submission("s2", "lab10-q1", "reverses a string")
        assert (a1.seq, a2.seq, b1.seq) == (1, 2, 1)

    def test_provider_miss_still_persists_attempt(self, engine):
        result, attempt = engine.grade_submission(
            "s1", "lab10-q1", "a prompt with no recording anywhere"
        )
        assert result.outcome == OUTCOME_PROVIDER_FAILURE
        assert attempt.outcome == OUTCOME_PROVIDER_FAILURE
        assert attempt.transcript_id is None
        assert attempt.seq == 1
        assert engine.attempts.attempts_for("s1", "lab10-q1")

    def test_unknown_task(self, engine):
        with pytest.raises(UnknownTask):
            engine.grade_submission("s1", "lab99-q1", "anything")

    def test_empty_prompt_rejected_without_attempt(self, engine):
        with pytest.raises(EmptyPrompt):
            engine.grade_submission("s1", "lab10-q1", "   ")
        assert engine.attempts.attempts_for("s1", "lab10-q1") == []

    def test_replay_reproduces_verdicts_without_new_attempt(self, engine):
        result, attempt = engine.grade_submission(
            "s1", "lab10-q1", "reverses a string"
        )
        before = len(list(engine.attempts))
        again = engine.replay_transcript(attempt.transcript_id, "lab10-q1")
        assert len(list(engine.attempts)) == before
        assert again.outcome == result.outcome
        assert [r.verdict for r in again.verdicts] == [
            r.verdict for r in result.verdicts
        ]

    def test_status_rollup(self, engine):
        engine.grade_submission("s1", "lab10-q1",
                                "takes a string and turns it backwards")
        engine.grade_submission("s1", "lab10-q1", "reverses a string")
        status = engine.student_task_status("s1", "lab10-q1")
        assert status.attempt_count == 2
        assert not status.first_attempt_success
        assert status.ever_succeeded
        assert status.attempts_to_first_success == 2

    def test_status_empty(self, engine):
        status = engine.student_task_status("ghost", "lab10-q1")
        assert status.attempt_count == 0
        assert not status.ever_succeeded
        assert status.attempts_to_first_success is None


class TestEngineOutcomeMapping:
    """Force each provider/extraction/compile path via a crafted fixture."""

    def _engine_with_response(self, engine, raw):
        from promptgrader.gateway import build_envelope

        task = engine.bank.get("lab10-q1")
        env = build_envelope("crafted response prompt", task, engine.provider)
        engine.fixtures.put(env, raw, "m")
        return "crafted response prompt"

    def test_no_code_maps_to_extraction_failure(self, engine, tmp_path):
        from promptgrader.gateway import FixtureStore

        engine.fixtures = FixtureStore(tmp_path / "fx")
        prompt = self._engine_with_response(engine, "I cannot help with that!")
        result, attempt = engine.grade_submission("s1", "lab10-q1", prompt)
        assert result.outcome == OUTCOME_EXTRACTION_FAILURE
        assert attempt.transcript_id is not None
        assert result.extracted_code is None

    def test_wrong_interface_maps_to_compile_error(self, engine, tmp_path):
        from promptgrader.gateway import FixtureStore

        engine.fixtures = FixtureStore(tmp_path / "fx")
        prompt = self._engine_with_response(
            engine, "def bar(x, y):\n    return x\n"
        )
        result, _ = engine.grade_submission("s1", "lab10-q1", prompt)
        assert result.outcome == OUTCOME_COMPILE_ERROR
        assert result.extracted_code is not None
        assert result.verdicts == ()
