import json
from pathlib import Path

import pytest
from hypothesis import settings

settings.register_profile("membin", deadline=None, print_blob=True)
settings.load_profile("membin")

HERE = Path(__file__).parent


@pytest.fixture(scope="session")
def derived():
    """Constants produced by tools/derive_constants.py (independent of membin)."""
    return json.loads((HERE / "derived_constants.json").read_text())


@pytest.fixture
def model():
    from membin.model import CostModel
    return CostModel.default()


def pytest_terminal_summary(terminalreporter):
    from verdicts import LINES
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
