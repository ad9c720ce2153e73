import json
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("kvnlab", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("kvnlab")

# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def frozen():
    return json.loads((Path(__file__).parent / "oracles" / "frozen.json").read_text())


@pytest.fixture
def report_line():
    return ACCEPTANCE_LINES.append


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split(".")[0].split()[-1])):
            terminalreporter.write_line(line)
