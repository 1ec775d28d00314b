import os

import numpy as np
import pytest

from robust_tails.evt import TailModel

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def gpd_unit():
    """GPD reference with u=0, p_u=1, beta=2, sigma=1."""
    return TailModel(0.0, 1.0, 2.0, 1.0)


@pytest.fixture
def pareto_ref():
    """``P(X > y) = y**-2`` on ``[1, inf)``."""
    return TailModel(1.0, 1.0, 2.0, 0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def pytest_configure(config):
    os.environ.setdefault("ROBUST_TAILS_THREADS", "4")
