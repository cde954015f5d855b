from __future__ import annotations

from pathlib import Path

import pytest

from computelca.config import reference_config
from computelca.logs import RunLog, read_log, read_logs

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"
CONFIGS = ROOT / "configs"

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def cluster():
    return reference_config()


@pytest.fixture(scope="session")
def fixture_log() -> RunLog:
    return read_log(FIXTURES / "runs.log")


@pytest.fixture(scope="session")
def full_log() -> RunLog:
    return read_logs([FIXTURES / "runs.log", FIXTURES / "llm_backbone.log"])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


from hypothesis import settings  # noqa: E402

settings.register_profile("repro", derandomize=True, print_blob=True)
settings.load_profile("repro")
