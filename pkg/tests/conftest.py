import numpy as np
import pytest

from app.array.geometry import ArrayGeometry


def pytest_addoption(parser):
    parser.addoption(
        "--runslow", action="store_true", default=False, help="run slow trend checks"
    )


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running Monte-Carlo trend check")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


WAVELENGTH = 0.02


@pytest.fixture
def wavelength():
    """Carrier wavelength used throughout the tests (15 GHz)."""
    return WAVELENGTH


@pytest.fixture
def ula64():
    """64-element quarter-wavelength ULA."""
    return ArrayGeometry.ula(64, WAVELENGTH / 4)


@pytest.fixture
def ula16():
    """16-element half-wavelength ULA."""
    return ArrayGeometry.ula(16, WAVELENGTH / 2)


@pytest.fixture
def upa8():
    """8x8 half-wavelength UPA."""
    return ArrayGeometry.upa(8, 8, WAVELENGTH / 2)


@pytest.fixture
def rng():
    """Fixed-seed generator for test data."""
    return np.random.default_rng(1234)
