import numpy as np
import pytest

from bosemix.interaction import CouplingMatrix
from bosemix.lattice import GridSpec, KineticSpec, gaussian


def random_field_values(grid, rng):
    return rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape)


def mixture_setup(kind="semirelativistic", M=8, L=8.0, lam=(0.5, -0.3, -0.6), mu=(0.2, 0.1, 0.3), A=None):
    grid = GridSpec(1, M, L)
    k1 = KineticSpec(kind, 1.0, A)
    k2 = KineticSpec(kind, 1.5 if kind == "magnetic" else 1.0, A)
    c = CouplingMatrix(*lam, *mu, epsilon=2 * grid.h)
    psi = gaussian(grid, -1.0, 1.0, 1.0)
    phi = gaussian(grid, 1.0, 1.2, -0.5)
    return grid, k1, k2, c, psi, phi


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def acceptance(request):
    """Record one criterion outcome; printed in the terminal summary."""
    store = request.config.stash.setdefault(_KEY, [])

    def record(number, name, passed, detail=""):
        store.append((number, name, bool(passed), detail))
        return passed

    return record


_KEY = pytest.StashKey[list]()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(_KEY, [])
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, passed, detail in sorted(results, key=lambda r: (int(str(r[0]).rstrip("ab")), str(r[0]))):
        status = "PASS" if passed else "FAIL"
        line = f"criterion {number} [{status}] {name}"
        if detail:
            line += f": {detail}"
        terminalreporter.write_line(line)
