import re

import numpy as np
import pytest

from acperf import kernels
from acperf.scenario import DiscreteScenario, example_scenario

_CRITERIA = []


@pytest.fixture(params=kernels.available_backends())
def backend(request):
    with kernels.use_backend(request.param):
        yield request.param


@pytest.fixture
def example():
    return example_scenario()


@pytest.fixture
def constant_scenario():
    return DiscreteScenario((0.3, 0.7), {"a": [[(4.0, 1.0)], [(4.0, 1.0)]],
                                          "b": [[(1.0, 1.0)], [(7.0, 1.0)]]})


@pytest.fixture
def record_criterion():
    """Log an acceptance criterion's verdict, then assert it."""
    def record(number, name, passed, detail=""):
        _CRITERIA.append((number, name, bool(passed), detail))
        assert passed, f"criterion {number} ({name}) failed: {detail}"
    return record


def _order(row):
    num, tail = re.fullmatch(r"(\d+)(.*)", str(row[0])).groups()
    return int(num), tail


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, passed, detail in sorted(_CRITERIA, key=_order):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {str(number):<4} {name}: {detail}")


def rng(seed=0):
    return np.random.default_rng(seed)
