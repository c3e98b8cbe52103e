import numpy as np
import pytest

from gwshift import gws
from gwshift.materials import default_library
from gwshift.mie import LayeredSphere
from gwshift.verification import nondispersive_sphere

LSPR_SEED = complex(0.715e7, -0.0744e7)
ZERO_SEED = complex(1.2381e7, -0.01275e7)


@pytest.fixture(scope="session")
def library():
    return default_library()


@pytest.fixture(scope="session")
def lspr(library):
    """(record, M) for the 60/10 nm silica-gold particle in water."""
    M = gws.sphere_function(LayeredSphere.core_shell(60e-9, 10e-9), 1, "a", library,
                            k_ref=LSPR_SEED.real)
    return gws.locate_sphere(M, LSPR_SEED, "pole")


@pytest.fixture(scope="session")
def tracked_zero(library):
    M = gws.sphere_function(LayeredSphere.core_shell(60e-9, 10e-9), 1, "a", library,
                            k_ref=ZERO_SEED.real)
    return gws.locate_sphere(M, ZERO_SEED, "zero")


@pytest.fixture(scope="session")
def nd_sphere(library):
    return nondispersive_sphere(library)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
