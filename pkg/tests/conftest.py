import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from diskmorse.core import Configuration

DATA = Path(__file__).parent / "data"

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

R2 = 1.0 / (2.0 + math.sqrt(2.0))  # two disks on a diagonal


@pytest.fixture(scope="session")
def softened_n5():
    raw = json.loads((DATA / "n5_softened.json").read_text())
    return {k: Configuration.from_flat(np.array(v)) for k, v in raw.items()}


@pytest.fixture
def diagonal_pair():
    return Configuration([[R2, R2], [1 - R2, 1 - R2]])


def random_spread(rng, n, min_pair=0.2, lo=0.1, hi=0.9):
    """Uniform configuration with every pair at least ``min_pair`` apart."""
    while True:
        P = rng.uniform(lo, hi, (n, 2))
        d = np.sqrt(((P[:, None] - P[None]) ** 2).sum(-1)) + 10 * np.eye(n)
        if d.min() >= min_pair:
            return Configuration(P)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
