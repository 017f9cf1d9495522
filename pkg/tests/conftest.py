import numpy as np
import pytest

from legendrix.lie import build_algebra
from legendrix.reduction import CP2SU2, RotatingSphere

_ACCEPTANCE = {}


@pytest.fixture
def acceptance():
    """Record ``(criterion, passed, detail)`` for the end-of-run summary."""

    def record(number, passed, detail):
        _ACCEPTANCE[number] = (bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        passed, detail = _ACCEPTANCE[number]
        terminalreporter.write_line(f"ACCEPTANCE {number:>2} {'PASS' if passed else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def su2():
    return build_algebra("su2")


@pytest.fixture(scope="session")
def su3():
    return build_algebra("su3")


@pytest.fixture(scope="session")
def sphere():
    return RotatingSphere()


@pytest.fixture(scope="session")
def cp2():
    return CP2SU2()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
