import numpy as np
import pandas as pd
import pytest

from app.bench.metrics import match_locations
from app.config import MusicSettings
from app.exceptions import InvalidArgumentError
from app.linalg.subspace import noise_subspace, sample_covariance
from app.localizer.domain import SearchDomain, SearchGrid
from app.localizer.music import (
    MusicLocalizer,
    music_localize,
    music_spectrum,
    music_spectrum_from_covariance,
    pick_peaks,
    refine_peak,
    spectrum_frame,
)
from app.schema import SourceLocation


@pytest.fixture
def coarse_grid(narrow_domain):
    """61 x 50 grid over the narrow ULA domain."""
    return SearchGrid.from_spec(narrow_domain, "61x50")


@pytest.fixture
def unit_grid():
    """11 x 11 grid with 0.1 rad and 0.1 m steps."""
    return SearchGrid.from_spec(SearchDomain(phi=(-0.5, 0.5), range=(1.0, 2.0)), "11x11")


def test_source_on_a_grid_node_is_the_argmax(ula64, wavelength, simulate, coarse_grid):
    """Tests that a noiseless on-grid source peaks at its own node."""
    index = (40, 10)
    truth = coarse_grid.node(index)
    snapshots = simulate(ula64, wavelength, [truth], noise_variance=0.0)
    result = music_localize(snapshots, 1, grid=coarse_grid)

    assert result.estimates == [truth]
    assert result.per_source_cost[0] == pytest.approx(0.0, abs=1e-9)
    assert result.abort_reason is None


def test_spectrum_is_positive_and_bounded(ula16, wavelength, simulate):
    """Tests 0 < P_MU <= 1 / epsilon on every node."""
    domain = SearchDomain.default(ula16, wavelength)
    grid = SearchGrid.from_spec(domain, "40x30")
    snapshots = simulate(ula16, wavelength, [grid.node((10, 5)), grid.node((30, 20))])
    spectrum = music_spectrum(
        noise_subspace(sample_covariance(snapshots.data), 2), grid, ula16, wavelength
    )
    assert spectrum.shape == (40, 30)
    assert np.all(spectrum > 0) and np.all(spectrum <= 1.0 / (1e-12 * 16))


def test_spectrum_is_flat_without_sources(ula16, wavelength, simulate):
    """Tests that K = 0 uses the whole space as noise subspace."""
    grid = SearchGrid.from_spec(SearchDomain.default(ula16, wavelength), "20x20")
    covariance = sample_covariance(simulate(ula16, wavelength, []).data)
    spectrum = music_spectrum_from_covariance(covariance, 0, grid, ula16, wavelength)
    np.testing.assert_allclose(spectrum, 1.0 / 16, rtol=1e-9)


def test_chunked_and_threaded_evaluation_agree(ula16, wavelength, simulate):
    """Tests that block size and worker count do not change the spectrum."""
    grid = SearchGrid.from_spec(SearchDomain.default(ula16, wavelength), "30x25")
    basis = noise_subspace(
        sample_covariance(simulate(ula16, wavelength, [grid.node((5, 5))]).data), 1
    )
    whole = music_spectrum(basis, grid, ula16, wavelength, settings=MusicSettings())
    pieces = music_spectrum(
        basis, grid, ula16, wavelength, settings=MusicSettings(chunk_size=64, workers=3)
    )
    np.testing.assert_allclose(whole, pieces, rtol=1e-12)


def test_pick_peaks_orders_separated_spikes(unit_grid):
    """Tests descending order of two well separated maxima."""
    spectrum = np.ones(unit_grid.shape)
    spectrum[8, 8], spectrum[2, 2] = 5.0, 10.0
    assert pick_peaks(spectrum, unit_grid, 2) == [(2, 2), (8, 8)]
    assert pick_peaks(spectrum, unit_grid, 1) == [(2, 2)]


def test_pick_peaks_exclusion_radius(unit_grid):
    """Tests that a weaker peak inside the exclusion ball is skipped."""
    spectrum = np.ones(unit_grid.shape)
    spectrum[2, 2], spectrum[2, 4] = 10.0, 5.0
    assert pick_peaks(spectrum, unit_grid, 2, exclusion_radius=0.25) == [(2, 2)]
    assert pick_peaks(spectrum, unit_grid, 2, exclusion_radius=0.15) == [(2, 2), (2, 4)]


def test_pick_peaks_shortfall_and_fallback(unit_grid):
    """Tests fewer peaks than requested and the argmax fallback on a plateau."""
    spectrum = np.ones(unit_grid.shape)
    spectrum[5, 5] = 3.0
    assert pick_peaks(spectrum, unit_grid, 3) == [(5, 5)]
    assert pick_peaks(np.ones(unit_grid.shape), unit_grid, 2) == [(0, 0)]


def test_pick_peaks_argument_checks(unit_grid):
    """Tests the K and shape checks."""
    with pytest.raises(InvalidArgumentError, match="K >= 1"):
        pick_peaks(np.ones(unit_grid.shape), unit_grid, 0)
    with pytest.raises(InvalidArgumentError, match="does not match"):
        pick_peaks(np.ones((3, 3)), unit_grid, 1)


def test_spectrum_frame(unit_grid):
    """Tests the long-form export columns."""
    frame = spectrum_frame(np.arange(121.0).reshape(11, 11), unit_grid)
    assert isinstance(frame, pd.DataFrame)
    assert list(frame.columns) == ["phi_deg", "r_m", "value"]
    assert len(frame) == 121
    assert frame["r_m"].iloc[1] == pytest.approx(1.1)


def test_localizer_uses_the_grid_spec(ula16, wavelength, simulate):
    """Tests grid selection in the object form."""
    domain = SearchDomain.default(ula16, wavelength)
    localizer = MusicLocalizer(domain=domain, grid_spec="25x20")
    snapshots = simulate(ula16, wavelength, [SearchGrid.from_spec(domain, "25x20").node((12, 8))])

    assert localizer.grid_for(snapshots).shape == (25, 20)
    result = localizer.localize(snapshots, 1)
    assert result.method == "music" and len(result.estimates) == 1


@pytest.fixture
def off_grid_source(coarse_grid):
    """A location 0.2 cells past node (30, 20) on both axes."""
    lower = coarse_grid.node((30, 20)).to_vector()
    return SourceLocation.from_vector(lower + 0.2 * coarse_grid.cell)


def test_plain_pick_stays_within_the_refinement_reach(
    ula64, wavelength, simulate, coarse_grid, off_grid_source
):
    """Tests that the grid maximum lies on the source's ridge within three cells."""
    snapshots = simulate(ula64, wavelength, [off_grid_source], noise_variance=0.0)
    estimate = music_localize(snapshots, 1, grid=coarse_grid).estimates[0]
    error = np.abs(estimate.to_vector() - off_grid_source.to_vector())
    assert np.all(error <= 3.0 * coarse_grid.cell)


def test_off_grid_source_is_within_half_a_cell(
    ula64, wavelength, simulate, coarse_grid, off_grid_source
):
    """Tests the half-cell bound for a noiseless source between grid nodes."""
    snapshots = simulate(ula64, wavelength, [off_grid_source], noise_variance=0.0)
    result = music_localize(
        snapshots, 1, grid=coarse_grid, settings=MusicSettings(refine=True)
    )

    error = np.abs(result.estimates[0].to_vector() - off_grid_source.to_vector())
    assert np.all(error <= 0.5 * coarse_grid.cell)
    assert np.all(error <= 0.05 * coarse_grid.cell)
    assert result.per_source_cost[0] < 1e-6


def test_refinement_keeps_an_on_grid_source(ula64, wavelength, simulate, coarse_grid):
    """Tests that polishing an exact node does not move it."""
    truth = coarse_grid.node((40, 10))
    snapshots = simulate(ula64, wavelength, [truth], noise_variance=0.0)
    estimate = music_localize(
        snapshots, 1, grid=coarse_grid, settings=MusicSettings(refine=True)
    ).estimates[0]

    np.testing.assert_allclose(
        estimate.to_vector(), truth.to_vector(), atol=1e-6 * coarse_grid.cell.min()
    )


def test_refine_peak_stays_inside_the_domain(ula16, wavelength, simulate):
    """Tests that polishing from the domain corner stays inside the box."""
    domain = SearchDomain.default(ula16, wavelength)
    grid = SearchGrid.from_spec(domain, "15x12")
    corner = SourceLocation.from_vector(
        grid.node((0, 0)).to_vector() + 0.3 * grid.cell
    )
    snapshots = simulate(ula16, wavelength, [corner], noise_variance=0.0)
    basis = noise_subspace(sample_covariance(snapshots.data), 1)
    location, energy = refine_peak((0, 0), grid, basis, ula16, wavelength)

    for value, (low, high) in zip(location.to_vector(), domain.bounds()):
        assert low <= value <= high
    assert energy >= 0.0
    np.testing.assert_allclose(location.to_vector(), corner.to_vector(), atol=1e-3 * grid.cell.min())


def test_finer_grid_lowers_the_error(ula64, wavelength, simulate, narrow_domain):
    """Tests that grid mismatch shrinks on a finer grid at 20 dB."""
    rng = np.random.default_rng(11)
    coarse = SearchGrid.from_spec(narrow_domain, "31x25")
    fine = SearchGrid.from_spec(narrow_domain, "121x100")
    errors = {"coarse": [], "fine": []}
    for trial in range(8):
        truth = [
            SourceLocation.from_degrees(rng.uniform(-20.0, 20.0), rng.uniform(1.0, 3.0))
        ]
        snapshots = simulate(ula64, wavelength, truth, snr_db=20.0, seed=300 + trial)
        for name, grid in (("coarse", coarse), ("fine", fine)):
            estimates = music_localize(snapshots, 1, grid=grid).estimates
            errors[name].append(match_locations(truth, estimates, ula64).rmse)

    assert np.median(errors["fine"]) <= np.median(errors["coarse"])
