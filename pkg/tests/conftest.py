import numpy as np
import pytest

from vanhove.model import make_preset
from vanhove.nz import build_projections

SMALL_PRESETS = ("dephasing", "star-bath", "parity", "random")


@pytest.fixture(scope="session")
def models():
    return {name: make_preset(name) for name in SMALL_PRESETS}


@pytest.fixture(scope="session")
def pairs(models):
    return {name: build_projections(m) for name, m in models.items()}


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_matrix(rng, d):
    return rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))


def random_hermitian(rng, d):
    a = random_matrix(rng, d)
    return (a + a.conj().T) / 2


def random_density(rng, d):
    a = random_matrix(rng, d)
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def sorted_times(rng, n, t_max=3.0, size=None):
    """Rows ``(0, z_1 <= ... <= z_{n+1})``."""
    shape = (n + 1,) if size is None else (size, n + 1)
    z = np.sort(rng.uniform(0.0, t_max, size=shape), axis=-1)
    pad = np.zeros(shape[:-1] + (1,))
    return np.concatenate([pad, z], axis=-1)


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
