import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from uncertain_shapley import DeterministicGame  # noqa: E402

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def game_a():
    """v(empty)=0, v({1})=1, v({2})=2, v({1,2})=4."""
    return DeterministicGame(2, np.array([0.0, 1.0, 2.0, 4.0]))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
