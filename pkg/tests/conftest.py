import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from p2hgrid.datamodel import bundled_scenario_path, load_scenario  # noqa: E402


@pytest.fixture(scope="session")
def toy6():
    return load_scenario(bundled_scenario_path("toy6"))


@pytest.fixture(scope="session")
def ireland24():
    return load_scenario(bundled_scenario_path("ireland35"), horizon=24)


_ACCEPTANCE: list[str] = []


@pytest.fixture(scope="session")
def record_criterion():
    def record(number: int, verdict: str, title: str, detail: str) -> None:
        line = f"criterion {number:>2}: {verdict}  {title}  [{detail}]"
        _ACCEPTANCE.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
