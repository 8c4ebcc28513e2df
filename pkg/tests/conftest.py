import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mvexergy.model import EngineModel  # noqa: E402

ACCEPTANCE_LOG = []


@pytest.fixture(scope="session")
def model():
    """Default calibration with mean-value maps at the study EGR rates."""
    return EngineModel.default(egr_rates=(0.0, 0.1, 0.2, 0.3))


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion."""

    def record(tag: str, ok: bool, detail: str):
        ACCEPTANCE_LOG.append(f"{tag} {'PASS' if ok else 'FAIL'}  {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LOG:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LOG, key=lambda s: int(s.split()[0].split("-")[1])):
        terminalreporter.write_line(line)
