import numpy as np
import pytest

from modnls.spectral import make_grid, transform_forward

ACCEPTANCE_LINES = []


def random_field(grid, rng, decay=0.0):
    """Random complex field; ``decay`` > 0 damps mode k by exp(-decay |k|)."""
    c = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    if decay:
        c = c * np.exp(-decay * np.sqrt(grid.ksq))
    from modnls.spectral import SpectralField
    return SpectralField(grid, c)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def grid128():
    return make_grid(1, 2 ** 7)


@pytest.fixture
def grid8():
    return make_grid(1, 4)


def real_field(grid, rng):
    return transform_forward(rng.standard_normal(grid.shape), grid)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
