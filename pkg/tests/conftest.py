import numpy as np
import pytest
from hypothesis import settings

from bolax import Potential
from bolax.finitegap import potential_from_roots
from bolax._backend import HAVE_NUMBA, set_backend

settings.register_profile("bolax", deadline=None, max_examples=40, print_blob=True)
settings.load_profile("bolax")

Q = 0.3


@pytest.fixture(scope="session")
def zero():
    return Potential.zero()


@pytest.fixture(scope="session")
def onegap():
    return potential_from_roots([Q], 24)


@pytest.fixture(scope="session")
def twogap():
    return potential_from_roots([0.3, 0.2], 24)


def random_complex_potential(seed, band=4, scale=0.02):
    rng = np.random.default_rng(seed)
    coeffs = {}
    for k in range(-band, band + 1):
        if k:
            coeffs[k] = (rng.standard_normal() + 1j * rng.standard_normal()) * scale / abs(k)
    return Potential(band, coeffs, hermitian=False)


@pytest.fixture(scope="session")
def small_complex():
    return random_complex_potential(7)


@pytest.fixture(params=["numba", "numpy"] if HAVE_NUMBA else ["numpy"])
def backend(request):
    prev = set_backend(request.param)
    yield request.param
    set_backend(prev)


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
