import pytest

from app.channel.models import Scenario, ScenarioSource
from app.channel.simulator import simulate_snapshots
from app.localizer.domain import SearchDomain
from app.optimizer.de import DEConfig


@pytest.fixture
def simulate():
    """Builds snapshot matrices for a list of locations."""

    def _simulate(geometry, wavelength, locations, snr_db=20.0, **kwargs):
        scenario = Scenario(
            geometry=geometry,
            wavelength=wavelength,
            sources=[ScenarioSource(location=loc, snr_db=snr_db) for loc in locations],
            snapshots=kwargs.pop("snapshots", 100),
            seed=kwargs.pop("seed", 17),
            **kwargs,
        )
        return simulate_snapshots(scenario)

    return _simulate


@pytest.fixture
def narrow_domain(ula64, wavelength):
    """+/-30 degree azimuth over the default near-field range of the 64-element ULA."""
    return SearchDomain.default(ula64, wavelength, phi_deg=30.0)


@pytest.fixture
def small_de():
    """A DE budget small enough for unit tests; bounds are replaced by the localizer."""
    return DEConfig(
        population_size=40, max_generations=200, F=0.5, Cr=0.8, bounds=[(0.0, 1.0)], seed=5
    )
