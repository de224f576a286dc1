import warnings

import numpy as np
import pytest

from spkoopman import HermiteDictionary, fit_edmd_continuous
from spkoopman.pipeline import generate_fixed_point

VAL = dict(x0=(0.4, 0.4), dt=0.03754, T=30.0)
TEST = dict(x0=(-0.3, -0.3), dt=0.06677, T=40.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def fixed_point_train():
    return generate_fixed_point("lhs", n_samples=1600, seed=0)


@pytest.fixture(scope="session")
def fixed_point_val():
    return generate_fixed_point("trajectory", **VAL)


@pytest.fixture(scope="session")
def fixed_point_test():
    return generate_fixed_point("trajectory", **TEST)


@pytest.fixture(scope="session")
def fixed_point_edmd(fixed_point_train):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return fit_edmd_continuous(
            fixed_point_train.states, fixed_point_train.derivatives, HermiteDictionary(5, 2)
        )


# acceptance gate: one line per criterion, printed after the run
GATE = {}


@pytest.fixture(scope="session")
def gate():
    def record(number, ok, detail):
        GATE[number] = (bool(ok), detail)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not GATE:
        return
    terminalreporter.section("acceptance gate")
    for number in sorted(GATE):
        ok, detail = GATE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
