import json

import httpx
import pytest

from promptgrader import gateway
from promptgrader.errors import (
    EmptyPrompt,
    MockMiss,
    NoCodeFound,
    ProviderError,
    ProviderTimeout,
    SchemaViolation,
    StorageError,
    UnknownTranscript,
)
from promptgrader.gateway import (
    PROVIDER_HTTP,
    PROVIDER_REPLAY,
    FixtureStore,
    PromptEnvelope,
    ProviderConfig,
    TranscriptRecord,
    TranscriptStore,
    build_envelope,
    extract_code,
    fixture_key,
    normalize_prompt,
    submit_prompt,
    transcript_id_for,
)
from promptgrader.values import Signature

SIG = Signature("foo", ("a",), ("str",), "str")


class FakeTask:
    signature = SIG


REPLAY = ProviderConfig(provider_id=PROVIDER_REPLAY)


class TestEnvelope:
    def test_prompt_rides_verbatim(self):
        prompt = "  reverse THE string!!  \n\twith   spacing "
        env = build_envelope(prompt, FakeTask(), REPLAY)
        assert env.student_prompt == prompt
        assert env.signature_hint == SIG
        assert env.target_language == "python"

    def test_system_instruction_names_the_interface(self):
        env = build_envelope("do the thing", FakeTask(), REPLAY)
        assert "named foo" in env.system_instruction
        assert "a string" in env.system_instruction
        assert "python" in env.system_instruction

    def test_empty_prompt_rejected(self):
        with pytest.raises(EmptyPrompt):
            build_envelope("   \n\t ", FakeTask(), REPLAY)

    def test_roundtrip(self):
        env = build_envelope("x", FakeTask(), REPLAY)
        assert PromptEnvelope.from_json(env.to_json()) == env


class TestProviderConfig:
    def test_replay_refuses_endpoint(self):
        with pytest.raises(SchemaViolation):
            ProviderConfig(provider_id=PROVIDER_REPLAY, endpoint="http://x")

    def test_http_needs_endpoint_and_credentials(self):
        with pytest.raises(SchemaViolation):
            ProviderConfig(provider_id=PROVIDER_HTTP, endpoint="http://x")
        ProviderConfig(
            provider_id=PROVIDER_HTTP, endpoint="http://x", credentials_ref="KEY"
        )

    def test_unknown_provider(self):
        with pytest.raises(SchemaViolation):
            ProviderConfig(provider_id="gpt_magic")

    def test_unknown_config_keys_rejected(self):
        with pytest.raises(SchemaViolation):
            ProviderConfig.from_json({"provider_id": PROVIDER_REPLAY, "retries": 3})


class TestFixtureKey:
    def test_whitespace_runs_collapse(self):
        assert normalize_prompt("a  b\n\tc") == "a b c"
        k1 = fixture_key(SIG, "reverse   the\nstring")
        k2 = fixture_key(SIG, "reverse the string")
        assert k1 == k2

    def test_case_is_significant(self):
        assert fixture_key(SIG, "Reverse it") != fixture_key(SIG, "reverse it")

    def test_signature_is_part_of_the_key(self):
        other = Signature("foo", ("a",), ("int",), "int")
        assert fixture_key(SIG, "same words") != fixture_key(other, "same words")


class TestFixtureStore:
    def test_put_then_lookup(self, tmp_path):
        store = FixtureStore(tmp_path)
        env = build_envelope("make it reversed", FakeTask(), REPLAY)
        key = store.put(env, "def foo(a):\n    return a[::-1]\n", "model-x")
        raw, model_id = FixtureStore(tmp_path).lookup(env)
        assert raw.startswith("def foo")
        assert model_id == "model-x"
        index = json.loads((tmp_path / "index.json").read_text())
        assert key in index["entries"]

    def test_miss_is_exact_never_fuzzy(self, tmp_path):
        store = FixtureStore(tmp_path)
        env = build_envelope("reverse the string", FakeTask(), REPLAY)
        store.put(env, "code", "m")
        near = build_envelope("reverse the strings", FakeTask(), REPLAY)
        with pytest.raises(MockMiss):
            store.lookup(near)

    def test_broken_index_is_storage_error(self, tmp_path):
        (tmp_path / "index.json").write_text("{nope")
        with pytest.raises(StorageError):
            FixtureStore(tmp_path).lookup(
                build_envelope("x", FakeTask(), REPLAY)
            )

    def test_packaged_fixtures_resolve(self, fixtures, bank):
        task = bank.get("lab10-q1")
        env = build_envelope("reverses a string", task, REPLAY)
        raw, _ = fixtures.lookup(env)
        assert raw.strip()


class TestTranscripts:
    def test_id_is_content_hash(self):
        env = build_envelope("z", FakeTask(), REPLAY)
        a = transcript_id_for(env, "resp")
        assert a == transcript_id_for(env, "resp")
        assert a != transcript_id_for(env, "resp2")

    def test_store_roundtrip_and_verify(self, tmp_path):
        env = build_envelope("z", FakeTask(), REPLAY)
        rec = TranscriptRecord(
            transcript_id=transcript_id_for(env, "body"),
            envelope=env, raw_response="body", provider_id=PROVIDER_REPLAY,
            model_id="m", created_at="2026-01-01T00:00:00+00:00", latency_ms=3,
        )
        store = TranscriptStore(tmp_path / "t.jsonl", durable=False)
        store.append(rec)
        assert store.get(rec.transcript_id) == rec
        with pytest.raises(UnknownTranscript):
            store.get("0" * 64)

    def test_tampered_transcript_fails_content_check(self, tmp_path):
        env = build_envelope("z", FakeTask(), REPLAY)
        rec = TranscriptRecord(
            transcript_id=transcript_id_for(env, "body"),
            envelope=env, raw_response="body", provider_id=PROVIDER_REPLAY,
            model_id="m", created_at="2026-01-01T00:00:00+00:00", latency_ms=3,
        )
        path = tmp_path / "t.jsonl"
        store = TranscriptStore(path, durable=False)
        store.append(rec)
        text = path.read_text().replace('"raw_response": "body"',
                                        '"raw_response": "evil"')
        path.write_text(text)
        with pytest.raises(StorageError) as exc:
            store.get(rec.transcript_id)
        assert "content check" in str(exc.value)


class TestSubmitReplay:
    def test_submit_records_transcript(self, tmp_path, fixtures, bank):
        task = bank.get("lab10-q1")
        env = build_envelope("reverses a string", task, REPLAY)
        store = TranscriptStore(tmp_path / "t.jsonl", durable=False)
        rec = submit_prompt(env, REPLAY, fixtures=fixtures, transcripts=store)
        assert rec.provider_id == PROVIDER_REPLAY
        assert rec.verify()
        assert store.get(rec.transcript_id).raw_response == rec.raw_response

    def test_miss_propagates(self, tmp_path, bank):
        task = bank.get("lab10-q1")
        env = build_envelope("no such recording exists", task, REPLAY)
        with pytest.raises(MockMiss):
            submit_prompt(env, REPLAY, fixtures=FixtureStore(tmp_path))


class TestSubmitHttp:
    CONFIG = ProviderConfig(
        provider_id=PROVIDER_HTTP,
        endpoint="https://llm.example/v1/chat",
        credentials_ref="GRADER_TEST_KEY",
        max_response_bytes=64,
    )

    @pytest.fixture(autouse=True)
    def _key(self, monkeypatch):
        monkeypatch.setenv("GRADER_TEST_KEY", "sekrit")

    def _patch_post(self, monkeypatch, handler):
        monkeypatch.setattr(gateway.httpx, "post", handler)

    def test_success_builds_verified_record(self, monkeypatch):
        env = build_envelope("hi", FakeTask(), REPLAY)
        seen = {}

        def fake_post(url, json=None, headers=None, timeout=None):
            seen.update(url=url, body=json, headers=headers, timeout=timeout)
            return httpx.Response(
                200,
                json={"choices": [{"message": {"content": "def foo(a):\n return a"}}]},
                request=httpx.Request("POST", url),
            )

        self._patch_post(monkeypatch, fake_post)
        rec = submit_prompt(env, self.CONFIG)
        assert rec.verify()
        assert rec.model_id == self.CONFIG.model_id
        assert rec.request_params == {"temperature": 0}
        assert seen["headers"]["Authorization"] == "Bearer sekrit"
        assert seen["body"]["messages"][1]["content"] == "hi"
        assert seen["timeout"] == pytest.approx(30.0)

    def test_oversize_response_is_truncated_and_flagged(self, monkeypatch):
        env = build_envelope("hi", FakeTask(), REPLAY)

        def fake_post(url, **kw):
            return httpx.Response(
                200,
                json={"choices": [{"message": {"content": "x" * 500}}]},
                request=httpx.Request("POST", url),
            )

        self._patch_post(monkeypatch, fake_post)
        rec = submit_prompt(env, self.CONFIG)
        assert rec.truncated
        assert len(rec.raw_response.encode()) <= 64
        assert rec.verify()

    def test_timeout_maps_to_provider_timeout(self, monkeypatch):
        def fake_post(url, **kw):
            raise httpx.ConnectTimeout("slow")

        self._patch_post(monkeypatch, fake_post)
        env = build_envelope("hi", FakeTask(), REPLAY)
        with pytest.raises(ProviderTimeout):
            submit_prompt(env, self.CONFIG)

    def test_refused_connection_maps_to_provider_timeout(self, monkeypatch):
        def fake_post(url, **kw):
            raise httpx.ConnectError("refused")

        self._patch_post(monkeypatch, fake_post)
        env = build_envelope("hi", FakeTask(), REPLAY)
        with pytest.raises(ProviderTimeout):
            submit_prompt(env, self.CONFIG)

    def test_http_error_status_maps_to_provider_error(self, monkeypatch):
        def fake_post(url, **kw):
            return httpx.Response(
                503, text="overloaded", request=httpx.Request("POST", url)
            )

        self._patch_post(monkeypatch, fake_post)
        env = build_envelope("hi", FakeTask(), REPLAY)
        with pytest.raises(ProviderError) as exc:
            submit_prompt(env, self.CONFIG)
        assert exc.value.status == 503

    def test_malformed_body_maps_to_provider_error(self, monkeypatch):
        def fake_post(url, **kw):
            return httpx.Response(
                200, json={"unexpected": True}, request=httpx.Request("POST", url)
            )

        self._patch_post(monkeypatch, fake_post)
        env = build_envelope("hi", FakeTask(), REPLAY)
        with pytest.raises(ProviderError):
            submit_prompt(env, self.CONFIG)

    def test_missing_credential_env(self, monkeypatch):
        monkeypatch.delenv("GRADER_TEST_KEY")
        env = build_envelope("hi", FakeTask(), REPLAY)
        with pytest.raises(ProviderError) as exc:
            submit_prompt(env, self.CONFIG)
        assert "GRADER_TEST_KEY" in str(exc.value)


class TestExtractCode:
    def test_fenced_block_wins(self):
        raw = (
            "Sure! Here's the function:\n"
            "```python\n"
            "def foo(a):\n"
            "    return a[::-1]\n"
            "```\n"
            "Hope that helps!\n"
        )
        assert extract_code(raw) == "def foo(a):\n    return a[::-1]"

    def test_multiple_fences_concatenate(self):
        raw = (
            "```python\nimport math\n```\n"
            "and then\n"
            "```python\ndef foo(a):\n    return math.floor(a)\n```\n"
        )
        out = extract_code(raw)
        assert "import math" in out and "def foo" in out
        compile(out, "<t>", "exec")

    def test_bare_code_passes_through(self):
        raw = "def foo(a):\n    return a + 1\n"
        assert extract_code(raw) == "def foo(a):\n    return a + 1"

    def test_prose_wrapped_code_without_fences(self):
        raw = (
            "The implementation below walks the string.\n"
            "def foo(a):\n"
            "    out = ''\n"
            "    for c in a:\n"
            "        out = c + out\n"
            "    return out\n"
            "That satisfies the request.\n"
        )
        out = extract_code(raw)
        assert out.startswith("def foo")
        assert "satisfies" not in out
        compile(out, "<t>", "exec")

    def test_pure_prose_raises(self):
        with pytest.raises(NoCodeFound):
            extract_code("I'm sorry, I can't write that for you today?!")

    def test_empty_raises(self):
        with pytest.raises(NoCodeFound):
            extract_code("")

    def test_idempotent_on_own_output(self):
        raw = "```\ndef foo(a):\n    return a * 2\n```"
        once = extract_code(raw)
        assert extract_code(once) == once

    def test_broken_fence_falls_back_to_window_scan(self):
        raw = (
            "```python\n"
            "def foo(a)\n"
            "    return a\n"
            "```\n"
            "Actually here is the fix:\n"
            "def foo(a):\n"
            "    return a\n"
        )
        out = extract_code(raw)
        compile(out, "<t>", "exec")
        assert "def foo(a):" in out
