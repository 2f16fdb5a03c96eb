import pytest

from famtree.core import ModelKind


@pytest.fixture(params=[ModelKind.linear(-0.5), ModelKind.linear(0.0), ModelKind.linear(1.0),
                        ModelKind.port(0.5), ModelKind.port(1.0)], ids=str)
def model(request):
    return request.param


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_lines():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
