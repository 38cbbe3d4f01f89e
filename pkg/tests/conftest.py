import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=200,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

from mprs.core import PointSet  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_problem(g, n=50, p=20, d=2, L=10.0):
    """Samples with smooth-ish values plus query sites in ``[0, L]**d``."""
    xs = g.uniform(0, L, size=(n, d))
    z = np.sin(xs.sum(axis=1) / 3.0) + 0.3 * g.standard_normal(n)
    q = g.uniform(0, L, size=(p, d))
    return PointSet(xs, z), PointSet(q)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
