import os
from pathlib import Path

import pytest

from wageshare import dataio

FIXTURES = Path(os.environ.get("WAGESHARE_FIXTURES", Path(__file__).parent / "fixtures"))

_acceptance_lines = []


@pytest.fixture(scope="session")
def fixture_dir():
    return FIXTURES


@pytest.fixture(scope="session")
def fixture_panel():
    """The checked-in canonical panel (rebuilt from raw inputs if absent)."""
    path = FIXTURES / "panel.csv"
    if path.is_file():
        return dataio.read_panel(path)
    return dataio.build_panel(
        FIXTURES / "fred", FIXTURES / "klems_extract.csv",
        jp_tfp_file=FIXTURES / "fred" / f"{dataio.JP_TFP_SERIES}.csv", strict_range=False,
    )


@pytest.fixture
def report():
    def _report(criterion, name, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {name}" + (f"  ({detail})" if detail else "")
        _acceptance_lines.append(line)
        print(line)
        return ok
    return _report


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
