import numpy as np
import pytest

from chiralfiber.coupling import AtomSpec, rate_bundle
from chiralfiber.fiber_modes import FiberSpec, omega_from_wavelength, solve_he11

A = 200e-9
LAM = 852e-9
GAMMA0 = 2 * np.pi * 5.2e6


@pytest.fixture(scope="session")
def fiber():
    return FiberSpec(A, 1.45, 1.0)


@pytest.fixture(scope="session")
def sol(fiber):
    return solve_he11(fiber, omega_from_wavelength(LAM))


def make_atom(r_over_a=1.0, dipole=None, phi=0.0, z=0.0):
    kw = {} if dipole is None else {"dipole": dipole}
    return AtomSpec(LAM, GAMMA0, r=r_over_a * A, phi=phi, z=z, **kw)


@pytest.fixture(scope="session")
def bundle(fiber, sol):
    """Rates at the fiber surface for the default rotating dipole."""
    return rate_bundle(make_atom(1.0), fiber, sol)


@pytest.fixture(scope="session")
def channel_plus(bundle):
    return bundle.channel(1)


@pytest.fixture(scope="session")
def channel_minus(bundle):
    return bundle.channel(-1)


_ACCEPTANCE = []


@pytest.fixture
def criterion():
    """Record and print one pass/fail line for an acceptance criterion."""

    def record(number, name, passed, detail):
        line = f"{'PASS' if passed else 'FAIL'}  criterion {number:>2}  {name}: {detail}"
        _ACCEPTANCE.append((number, line))
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_ACCEPTANCE):
        terminalreporter.write_line(line)
