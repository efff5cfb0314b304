import pytest

from ccpb.model import p0
from ccpb.solver import solve_continuation

# eps = 2^-k, k = 4..12, reached through the default 2^{-1/2} continuation factor
P0_LADDER = [2.0**-k for k in range(4, 13)]


def p0_path():
    path = [0.5 * 2.0 ** (-j / 2) for j in range(0, 6)]  # 0.5 .. 2^-3.5
    for k in range(4, 13):
        path.append(2.0**-k)
        if k < 12:
            path.append(2.0 ** -(k + 0.5))
    return path


@pytest.fixture(scope="session")
def p0_ladder_solutions():
    """Converged P0 solutions keyed by eps on the acceptance ladder."""
    sols = solve_continuation(p0(), p0_path())
    wanted = set(P0_LADDER)
    return {s.eps: s for s in sols if s.eps in wanted}


@pytest.fixture(scope="session")
def p0_eps01():
    return solve_continuation(p0(), [0.5, 0.35, 0.25, 0.18, 0.125, 0.1])[-1]


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
