import pytest

from polyflux import build_flux, make_profile


@pytest.fixture
def ex1_flux():
    # states 1, 2, 3 with f = 2, 3, 8
    return build_flux([1, 2, 3], [2, 3, 8])


@pytest.fixture
def ex1_profile(ex1_flux):
    # u0 = 3 for x < 1, 2 on [1, 2), 1 for x >= 2 (state indices 2, 1, 0)
    return make_profile([1, 2], [2, 1, 0], ex1_flux)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
