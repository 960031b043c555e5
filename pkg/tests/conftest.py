import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from sparsehb.assembly import GalerkinSystem  # noqa: E402
from sparsehb.basis import SparseGridSpace  # noqa: E402
from sparsehb.index_sets import make_standard_sparse  # noqa: E402


@pytest.fixture(scope="session")
def system_cache():
    cache = {}

    def get(index_set, mass=True):
        key = (index_set, mass)
        if key not in cache:
            cache[key] = GalerkinSystem.build(SparseGridSpace(index_set), with_mass=mass)
        return cache[key]

    return get


@pytest.fixture
def s3():
    return make_standard_sparse(3, 2)


ACCEPTANCE_LINES = {}


def record_acceptance(key, passed, detail):
    """Store one PASS/FAIL line for the terminal summary (and print it for ``-s`` runs)."""
    line = f"{key} {'PASS' if passed else 'FAIL'}: {detail}"
    ACCEPTANCE_LINES[key] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES, key=lambda k: int(k[1:])):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
