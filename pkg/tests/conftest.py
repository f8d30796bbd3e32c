import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("specmix", max_examples=40, deadline=None)
settings.load_profile("specmix")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def depolarizing_qubit(p):
    """Natural representation of X -> (1-p) X + p tr(X) 1/2 (column-major vec)."""
    one = np.eye(2).reshape(-1, order="F")
    return (1 - p) * np.eye(4) + p * np.outer(one, one) / 2


# one line per acceptance criterion, echoed again in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
