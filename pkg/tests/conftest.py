import pytest

import groundline as gl

_ACCEPTANCE_LINES: list[str] = []


def record_acceptance(line: str) -> None:
    _ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def town_scene():
    """The standard synthetic town, generated once per session."""
    return gl.generate_scene(gl.standard_town())


@pytest.fixture(scope="session")
def town_result(town_scene):
    """Full filter run on the standard town."""
    return gl.run_filter(town_scene.cloud)
