import numpy as np
import pytest


def pytest_addoption(parser):
    parser.addoption(
        "--runslow", action="store_true", default=False, help="run the full-size experiments"
    )


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-size experiment, needs --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def spd(rng):
    """Random SPD matrix with a gap after the first ``r`` eigenvalues."""
    from deflation_lab.analysis import random_spd

    def factory(n=20, r=3):
        return random_spd(n, r, rng)

    return factory


@pytest.fixture
def orthonormal_basis(rng):
    def factory(n, r):
        Q, _ = np.linalg.qr(rng.standard_normal((n, r)))
        return Q

    return factory


@pytest.fixture
def small_diffusion():
    """12 x 12 skyscraper problem, 4 subdomains with overlap 1."""
    from deflation_lab.pde import Grid2D, KappaField, assemble, decompose

    grid = Grid2D.square(12)
    A, b = assemble(grid, KappaField.skyscraper())
    dec = decompose(grid, A, 4, level=1)
    return grid, A, b, dec
