import numpy as np
import pytest

from feod.basis import build_basis
from feod.mesh import build_cube_tet_mesh
from feod.space import build_space

_ACCEPTANCE = {}


def record_criterion(number, name, passed, detail=""):
    _ACCEPTANCE[number] = (name, bool(passed), detail)


@pytest.fixture(scope="session")
def spaces():
    cache = {}

    def get(n, order):
        if (n, order) not in cache:
            cache[n, order] = (build_space(build_cube_tet_mesh(n), order), build_basis(order))
        return cache[n, order]

    return get


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        name, passed, detail = _ACCEPTANCE[number]
        terminalreporter.write_line(
            f"{'PASS' if passed else 'FAIL'} criterion {number}: {name}"
            + (f"  [{detail}]" if detail else ""))
