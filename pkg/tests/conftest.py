import functools

import numpy as np
import pytest

from nonresp.synth import SyntheticConfig, synth_generate


@functools.lru_cache(maxsize=None)
def synthetic(seed=0, n_rows=5820):
    return synth_generate(SyntheticConfig(n_rows=n_rows, seed=seed))


@pytest.fixture(scope="session")
def default_table():
    return synthetic(0)


@pytest.fixture(scope="session")
def small_table():
    return synthetic(3, 600)


@pytest.fixture
def gen():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(module.RESULTS):
        terminalreporter.write_line(module.RESULTS[number])
