import numpy as np
import pytest
from hypothesis import settings

from sdqcsim.cli import data_path
from sdqcsim.mbqc import load_pattern

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pattern(graph, angles=None):
    return load_pattern(data_path(graph), data_path(angles) if angles else None)


@pytest.fixture
def line3_quarter():
    return pattern("line3.edges", "quarter.angles")


@pytest.fixture
def c4_id():
    return pattern("c4.edges", "id.angles")


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.RESULTS):
        terminalreporter.write_line(line)
