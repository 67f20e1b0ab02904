import numpy as np
import pytest

from anomalyflow.geometry import MetricJet
from anomalyflow.jets import JetSpace
from anomalyflow.trig import random_hermitian_field, random_kahler_field, random_points


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def full_space():
    return JetSpace.full(3)


@pytest.fixture(scope="session")
def hermitian_jet(full_space):
    """Order-4 jets of a non-Kähler metric field at five points."""
    rng = np.random.default_rng(11)
    field = random_hermitian_field(rng)
    return MetricJet.from_field(field, random_points(rng, 5), 4, full_space)


@pytest.fixture(scope="session")
def kahler_jet(full_space):
    """Order-4 jets of a Kähler metric field at five points."""
    rng = np.random.default_rng(12)
    field, _ = random_kahler_field(rng, eps=0.3)
    return MetricJet.from_field(field, random_points(rng, 5), 4, full_space)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
