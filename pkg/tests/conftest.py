import numpy as np
import pytest

from eht.core import DensityMatrix, PureState


def random_pure(rng, n):
    v = rng.standard_normal(2**n) + 1j * rng.standard_normal(2**n)
    return PureState(v / np.linalg.norm(v))


def random_mixed(rng, n, rank=None):
    d = 2**n
    x = rng.standard_normal((d, rank or d)) + 1j * rng.standard_normal((d, rank or d))
    m = x @ x.conj().T
    return DensityMatrix(m / np.trace(m).real)


def random_hermitian(rng, d, scale=1.0):
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return scale * 0.5 * (a + a.conj().T)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import VERDICTS
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
