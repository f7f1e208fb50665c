import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from whybot.scenario import load_bundled_scenario

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def bundled_scenario():
    return load_bundled_scenario("beam_transport")


@pytest.fixture(scope="session")
def golden_trace_path() -> Path:
    return DATA_DIR / "beam_transport.golden.jsonl"


@pytest.fixture(scope="session")
def golden_trace_text(golden_trace_path) -> str:
    return golden_trace_path.read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def query_corpus() -> list:
    import json

    return json.loads((DATA_DIR / "query_corpus.json").read_text(encoding="utf-8"))
