import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from opalg.corpus import corpus

FROZEN = Path(__file__).parent / "oracles" / "frozen.json"

# filled by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES = []

settings.register_profile("opalg", max_examples=25, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("opalg")


@pytest.fixture(scope="session")
def frozen():
    return json.loads(FROZEN.read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def instances():
    return corpus(seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def rand_c(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def unit(n, i, j):
    E = np.zeros((n, n), complex)
    E[i, j] = 1.0
    return E


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
