import numpy as np
import pytest

from app.exceptions import IllConditionedBasisError, InvalidArgumentError
from app.linalg.subspace import (
    basis_condition,
    column_projector,
    eigendecompose,
    noise_power,
    noise_subspace,
    residual_project,
    sample_covariance,
    signal_subspace,
)


def _complex(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def test_sample_covariance_is_hermitian(rng):
    """Tests R = Y Y^H / T and its Hermitian symmetry."""
    data = _complex(rng, (6, 40))
    covariance = sample_covariance(data)
    np.testing.assert_allclose(covariance, data @ data.conj().T / 40, atol=1e-12)
    np.testing.assert_array_equal(covariance, covariance.conj().T)


def test_sample_covariance_rejects_empty_data():
    """Tests that empty data is rejected."""
    with pytest.raises(InvalidArgumentError, match="non-empty"):
        sample_covariance(np.zeros((4, 0)))


def test_eigendecomposition_is_sorted_and_phase_normalized(rng):
    """Tests descending order, reconstruction and the phase convention."""
    covariance = sample_covariance(_complex(rng, (8, 100)))
    decomposition = eigendecompose(covariance)
    values, vectors = decomposition.eigenvalues, decomposition.eigenvectors

    assert np.all(np.diff(values) <= 0)
    np.testing.assert_allclose(
        vectors @ np.diag(values) @ vectors.conj().T, covariance, atol=1e-10
    )
    np.testing.assert_allclose(np.abs(vectors[0].imag), 0.0, atol=1e-12)
    assert np.all(vectors[0].real > 0)


def test_signal_and_noise_subspaces_split_the_space(rng):
    """Tests orthonormality and complementarity of the two bases."""
    covariance = sample_covariance(_complex(rng, (10, 200)))
    signal = signal_subspace(covariance, 3)
    noise = noise_subspace(covariance, 3)
    assert signal.shape == (10, 3) and noise.shape == (10, 7)

    basis = np.hstack([signal, noise])
    np.testing.assert_allclose(basis.conj().T @ basis, np.eye(10), atol=1e-10)


def test_subspace_dimension_checks(rng):
    """Tests the admissible signal-subspace dimensions."""
    covariance = sample_covariance(_complex(rng, (4, 20)))
    with pytest.raises(InvalidArgumentError, match="K >= 1"):
        signal_subspace(covariance, 0)
    with pytest.raises(InvalidArgumentError, match="0 <= K < M"):
        noise_subspace(covariance, 4)
    assert noise_subspace(covariance, 0).shape == (4, 4)


def test_projector_is_idempotent_and_hermitian(rng):
    """Tests P^2 = P, P^H = P and that P fixes its columns."""
    basis = _complex(rng, (12, 3))
    projector = column_projector(basis)
    np.testing.assert_allclose(projector @ projector, projector, atol=1e-10)
    np.testing.assert_allclose(projector, projector.conj().T, atol=1e-12)
    np.testing.assert_allclose(projector @ basis, basis, atol=1e-10)
    assert np.trace(projector).real == pytest.approx(3.0)


def test_projector_rejects_rank_deficient_basis(rng):
    """Tests the ill-conditioned basis error and its condition attribute."""
    column = _complex(rng, 12)
    basis = np.column_stack([column, 2.0 * column])
    assert basis_condition(basis) < 1e-10
    with pytest.raises(IllConditionedBasisError) as info:
        column_projector(basis)
    assert info.value.condition < 1e-10


def test_residual_project_matches_explicit_projector(rng):
    """Tests (I - P_a) Y against the materialized projector."""
    data = _complex(rng, (9, 7))
    vector = _complex(rng, 9)
    expected = (np.eye(9) - column_projector(vector)) @ data
    np.testing.assert_allclose(residual_project(data, vector), expected, atol=1e-10)


def test_residual_project_rejects_zero_vector(rng):
    """Tests that a zero steering vector cannot be projected out."""
    with pytest.raises(InvalidArgumentError, match="zero vector"):
        residual_project(_complex(rng, (3, 2)), np.zeros(3))


def test_residual_projection_splits_the_energy(rng):
    """Tests |Y|^2 = |(I - P_a) Y|^2 + |P_a Y|^2."""
    data = _complex(rng, (12, 9))
    vector = _complex(rng, 12)
    residual = residual_project(data, vector)
    captured = data - residual
    total = np.vdot(data, data).real
    assert np.vdot(residual, residual).real + np.vdot(captured, captured).real == pytest.approx(
        total, rel=1e-9
    )
    np.testing.assert_allclose(vector.conj() @ residual, 0.0, atol=1e-9 * np.sqrt(total))


def test_eigenvalues_sum_to_the_data_energy(rng):
    """Tests trace(R) = |Y|_F^2 / T."""
    data = _complex(rng, (16, 30))
    values = eigendecompose(sample_covariance(data)).eigenvalues
    assert values.sum() == pytest.approx(np.vdot(data, data).real / 30, rel=1e-9)


def test_rank_one_signal_subspace_spans_the_source(rng):
    """Tests that the dominant eigenvector of a rank-1 covariance is the source direction."""
    vector = np.exp(1j * rng.uniform(0, 2 * np.pi, 10))
    covariance = sample_covariance(np.outer(vector, _complex(rng, 25)))
    basis = signal_subspace(covariance, 1)
    leftover = vector - basis @ (basis.conj().T @ vector)
    assert np.linalg.norm(leftover) / np.linalg.norm(vector) < 1e-8


def test_noise_power_averages_the_weakest_eigenvalues(rng):
    """Tests sigma^2 as the mean of the M - K smallest eigenvalues."""
    unitary, _ = np.linalg.qr(_complex(rng, (5, 5)))
    covariance = unitary @ np.diag([9.0, 4.0, 2.0, 1.0, 0.0]) @ unitary.conj().T
    assert noise_power(covariance, 2) == pytest.approx(1.0)
    assert noise_power(covariance, 0) == pytest.approx(3.2)
    with pytest.raises(InvalidArgumentError, match="0 <= K < M=5"):
        noise_power(covariance, 5)


def test_noise_power_of_white_data(rng):
    """Tests that white noise of unit power is estimated close to one."""
    covariance = sample_covariance(_complex(rng, (8, 4000)) / np.sqrt(2.0))
    assert noise_power(covariance, 1) == pytest.approx(1.0, rel=0.1)
