import math

import numpy as np
import pytest

from app.exceptions import InvalidArgumentError
from app.linalg.subspace import sample_covariance, signal_subspace
from app.localizer.domain import SearchDomain
from app.localizer.neef import NeefDELocalizer, neef_de
from app.objective.costs import esf_cost_batch
from app.schema import SourceLocation


SOURCE = SourceLocation.from_degrees(20.0, 1.5)


@pytest.fixture
def joint_de(small_de):
    """Joint-search budget run to its last generation."""
    return small_de.model_copy(update={"max_generations": 300})


def test_single_noiseless_source_is_recovered(ula64, wavelength, simulate, narrow_domain, joint_de):
    """Tests K = 1 on noiseless data."""
    snapshots = simulate(ula64, wavelength, [SOURCE], noise_variance=0.0)
    result = neef_de(snapshots, 1, domain=narrow_domain, de_config=joint_de)

    estimate = result.estimates[0]
    assert abs(math.degrees(estimate.phi - SOURCE.phi)) < 0.01
    assert abs(estimate.range - SOURCE.range) < 0.01
    assert result.per_source_cost[0] < 1e-8
    assert result.traces[0].best_cost < 1e-8
    assert result.traces[0].generations == 300
    assert not result.flags and result.residual_energies == []


def test_default_budget_runs_every_generation(ula64, wavelength, simulate, narrow_domain):
    """Tests that the default joint search does not stop before Gmax."""
    snapshots = simulate(ula64, wavelength, [SOURCE], noise_variance=0.0)
    result = neef_de(snapshots, 1, domain=narrow_domain, seed=4)

    trace = result.traces[0]
    assert trace.generations == 500
    assert len(trace.trace) == 501
    assert trace.best_cost < 1e-8


def test_two_sources_are_located_jointly(ula64, wavelength, simulate, narrow_domain, joint_de):
    """Tests K = 2 with unequal powers; the estimate order is arbitrary."""
    truth = [SOURCE, SourceLocation.from_degrees(-10.0, 3.0)]
    snapshots = simulate(ula64, wavelength, truth, snr_db=25.0, snapshots=200)
    de = joint_de.model_copy(update={"population_size": 80, "max_generations": 400})
    result = neef_de(snapshots, 2, domain=narrow_domain, de_config=de)

    estimated = sorted(result.estimates, key=lambda loc: loc.phi)
    expected = sorted(truth, key=lambda loc: loc.phi)
    for est, true in zip(estimated, expected):
        assert abs(math.degrees(est.phi - true.phi)) < 0.5
    assert len(result.per_source_cost) == 2


def test_cost_is_invariant_to_source_order(ula16, wavelength, simulate, rng):
    """Tests that permuting the source blocks leaves the ESF cost unchanged."""
    truth = [
        SourceLocation.from_degrees(-20.0, 0.5),
        SourceLocation.from_degrees(10.0, 0.7),
        SourceLocation.from_degrees(35.0, 0.9),
    ]
    snapshots = simulate(ula16, wavelength, truth)
    basis = signal_subspace(sample_covariance(snapshots.data), 3)
    domain = SearchDomain.default(ula16, wavelength)
    low, high = np.array(domain.joint_bounds(3)).T
    candidates = rng.uniform(low, high, size=(25, 6))
    permuted = candidates.reshape(25, 3, 2)[:, [2, 0, 1], :].reshape(25, 6)

    np.testing.assert_allclose(
        esf_cost_batch(candidates, basis, ula16, wavelength),
        esf_cost_batch(permuted, basis, ula16, wavelength),
        atol=1e-10,
    )


def test_source_count_limits(ula16, wavelength, simulate):
    """Tests 1 <= K < M."""
    snapshots = simulate(ula16, wavelength, [])
    with pytest.raises(InvalidArgumentError, match="1 <= K < M=16"):
        neef_de(snapshots, 0)
    with pytest.raises(InvalidArgumentError, match="1 <= K < M=16"):
        NeefDELocalizer().localize(snapshots, 16)
