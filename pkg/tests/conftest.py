import numpy as np
import pytest

from stableforms.exterior import Form, act
from stableforms.hitchin import omega0, phi0, sigma0
from stableforms.solutions import nearly_kahler_su2su2

# PASS/FAIL lines recorded by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def random_matrix(rng, n=6, sign=None, cond_max=50.0):
    """A random invertible matrix with bounded condition number and, optionally, a chosen sign of det."""
    while True:
        A = rng.normal(size=(n, n)) + 2.0 * np.eye(n)
        if np.linalg.cond(A) > cond_max:
            continue
        if sign is not None and np.sign(np.linalg.det(A)) != sign:
            A[:, 0] *= -1
        return A


def random_form(rng, dim, degree):
    from math import comb

    return Form(dim, degree, rng.normal(size=comb(dim, degree)))


def standard(degree):
    return {2: omega0, 3: phi0, 4: sigma0}[degree]()


def random_stable(rng, degree, sign=None):
    return act(random_matrix(rng, sign=sign), standard(degree))


def random_pair(rng):
    """A random valid SU(3) pair: the standard pair moved by an orientation-preserving map."""
    A = random_matrix(rng, sign=1)
    return act(A, omega0()), act(A, phi0())


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def nk():
    return nearly_kahler_su2su2()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
