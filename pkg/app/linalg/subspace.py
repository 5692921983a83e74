"""Sample covariance, Hermitian eigendecomposition and column-space projectors."""

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import linalg

from app.exceptions import IllConditionedBasisError, InvalidArgumentError
from app.logger import logger


RANK_TOL = 1e-10
DEGENERACY_TOL = 1e-12


class EigenDecomposition(BaseModel):
    """Eigenpairs of a Hermitian matrix, eigenvalues sorted descending.

    Each eigenvector is phase-normalized so that its first non-negligible component
    is real and positive, which makes the decomposition reproducible.
    """

    eigenvalues: np.ndarray = Field(..., description="Real eigenvalues, descending")
    eigenvectors: np.ndarray = Field(..., description="Unitary matrix, columns aligned")

    model_config = ConfigDict(arbitrary_types_allowed=True)

    def signal_basis(self, k: int) -> np.ndarray:
        return self.eigenvectors[:, :k]

    def noise_basis(self, k: int) -> np.ndarray:
        return self.eigenvectors[:, k:]


def _normalize_phases(vectors: np.ndarray) -> np.ndarray:
    magnitudes = np.abs(vectors)
    threshold = 1e-8 * magnitudes.max(axis=0, keepdims=True)
    pivot = np.argmax(magnitudes > threshold, axis=0)
    anchors = vectors[pivot, np.arange(vectors.shape[1])]
    return vectors * (np.abs(anchors) / anchors)[None, :]


def sample_covariance(data: np.ndarray) -> np.ndarray:
    """R = (1/T) Y Y^H."""
    data = np.asarray(data)
    if data.ndim != 2 or data.size == 0:
        raise InvalidArgumentError(
            f"Sample covariance needs non-empty M x T data, got {data.shape}"
        )
    covariance = data @ data.conj().T / data.shape[1]
    return 0.5 * (covariance + covariance.conj().T)


def eigendecompose(matrix: np.ndarray) -> EigenDecomposition:
    eigenvalues, eigenvectors = linalg.eigh(matrix)
    order = np.argsort(eigenvalues, kind="stable")[::-1]
    return EigenDecomposition(
        eigenvalues=eigenvalues[order],
        eigenvectors=_normalize_phases(eigenvectors[:, order]),
    )


def _check_split(decomposition: EigenDecomposition, k: int) -> None:
    m = decomposition.eigenvalues.shape[0]
    if not 0 <= k < m:
        raise InvalidArgumentError(
            f"Subspace dimension must satisfy 0 <= K < M={m}, got {k}"
        )
    if 0 < k < m:
        gap = decomposition.eigenvalues[k - 1] - decomposition.eigenvalues[k]
        scale = max(1.0, abs(decomposition.eigenvalues[0]))
        if gap <= DEGENERACY_TOL * scale:
            logger.warning(
                f"Degenerate signal subspace: eigenvalues {k} and {k + 1} differ by {gap:.3e}"
            )


def signal_subspace(covariance: np.ndarray, k: int) -> np.ndarray:
    """Orthonormal M x K basis of the K dominant eigenvectors."""
    if k < 1:
        raise InvalidArgumentError(f"Signal subspace needs K >= 1, got {k}")
    decomposition = eigendecompose(covariance)
    _check_split(decomposition, k)
    return decomposition.signal_basis(k)


def noise_subspace(covariance: np.ndarray, k: int) -> np.ndarray:
    """Orthonormal M x (M-K) basis of the remaining eigenvectors."""
    decomposition = eigendecompose(covariance)
    _check_split(decomposition, k)
    return decomposition.noise_basis(k)


def noise_power(covariance: np.ndarray, k: int) -> float:
    """Per-element noise power: the mean of the M - K weakest eigenvalues of R."""
    decomposition = eigendecompose(covariance)
    m = decomposition.eigenvalues.shape[0]
    if not 0 <= k < m:
        raise InvalidArgumentError(
            f"Noise power needs 0 <= K < M={m}, got {k}"
        )
    return float(max(decomposition.eigenvalues[k:].mean(), 0.0))


def basis_condition(basis: np.ndarray) -> float:
    """Smallest over largest singular value (0 for a zero or wide matrix)."""
    if basis.shape[1] > basis.shape[0]:
        return 0.0
    singular_values = linalg.svdvals(basis)
    if singular_values[0] == 0:
        return 0.0
    return float(singular_values[-1] / singular_values[0])


def column_projector(basis: np.ndarray, rank_tol: float = RANK_TOL) -> np.ndarray:
    """P_A = A (A^H A)^{-1} A^H through a Hermitian Gram solve."""
    basis = np.asarray(basis, dtype=np.complex128)
    if basis.ndim == 1:
        basis = basis[:, None]
    condition = basis_condition(basis)
    if condition <= rank_tol:
        raise IllConditionedBasisError(
            f"Projector basis is rank deficient (condition {condition:.3e})", condition
        )
    gram = basis.conj().T @ basis
    coefficients = linalg.solve(gram, basis.conj().T, assume_a="her")
    projector = basis @ coefficients
    return 0.5 * (projector + projector.conj().T)


def residual_project(data: np.ndarray, vector: np.ndarray) -> np.ndarray:
    """(I - P_a) Y = Y - a (a^H Y) / (a^H a)."""
    vector = np.asarray(vector, dtype=np.complex128).ravel()
    norm_sq = float(np.vdot(vector, vector).real)
    if norm_sq == 0.0:
        raise InvalidArgumentError("Cannot project out a zero vector")
    coefficients = vector.conj() @ data / norm_sq
    return data - np.outer(vector, coefficients)
