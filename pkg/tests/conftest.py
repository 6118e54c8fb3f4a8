import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from brkga import KnapsackDecoder, RngStream, TspDecoder, TspInstance  # noqa: E402
from brkga.instances import random_knapsack, random_tsp  # noqa: E402


@pytest.fixture
def rng():
    return RngStream(12345, 0)


@pytest.fixture
def tsp7():
    return TspDecoder(random_tsp(7, seed=7))


@pytest.fixture
def knap12():
    return KnapsackDecoder(random_knapsack(12, seed=12))


@pytest.fixture
def square():
    return TspInstance([(0, 0), (0, 1), (1, 1), (1, 0)])


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE_LINES
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
