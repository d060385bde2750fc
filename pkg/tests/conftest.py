import pytest

from promptgrader.bank import default_bank_dir, load_bank
from promptgrader.gateway import (
    PROVIDER_REPLAY,
    FixtureStore,
    ProviderConfig,
    TranscriptStore,
    default_fixture_dir,
)
from promptgrader.grading import AttemptStore, GradingEngine
from promptgrader.sandbox import ResourceLimits


@pytest.fixture(scope="session")
def bank():
    return load_bank(default_bank_dir())


@pytest.fixture(scope="session")
def fixtures():
    return FixtureStore(default_fixture_dir())


@pytest.fixture
def replay_config():
    return ProviderConfig(provider_id=PROVIDER_REPLAY)


@pytest.fixture
def engine(tmp_path, bank, fixtures, replay_config):
    return GradingEngine(
        bank=bank,
        provider=replay_config,
        attempts=AttemptStore(tmp_path / "attempts.jsonl", durable=False),
        transcripts=TranscriptStore(tmp_path / "transcripts.jsonl", durable=False),
        fixtures=fixtures,
    )


@pytest.fixture(scope="session")
def quick_limits():
    # tight but CI-safe budgets so failure-path tests stay fast
    return ResourceLimits(wall_ms=3000, cpu_ms=1500)
