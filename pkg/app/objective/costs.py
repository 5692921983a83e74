"""Cost functions minimized by the localizers: RLS, penalized RLS and ESF.

Every cost has a scalar form taking ``SourceLocation`` values and a batch form taking
an (N, D) candidate matrix, which is what the optimizer evaluates per generation.
"""

from typing import Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from app.array.geometry import ArrayGeometry, as_parameter_matrix, steering_matrix
from app.config import PenaltySettings, config
from app.exceptions import IllConditionedBasisError
from app.linalg.subspace import RANK_TOL, column_projector
from app.schema import PhaseModel, SourceLocation


Locations = Union[Sequence[SourceLocation], np.ndarray]


class PenaltyConfig(BaseModel):
    """Hinge penalty around already detected modes."""

    model_config = ConfigDict(frozen=True)

    alpha: float = Field(1000.0, ge=0, description="Penalty coefficient")
    delta_min: float = Field(0.08, ge=0, description="Minimum normalized separation")
    phi0: float = Field(1.0, gt=0, description="Azimuth normalization (rad)")
    r0: float = Field(1.0, gt=0, description="Range normalization (m)")
    psi0: float = Field(1.0, gt=0, description="Elevation normalization (rad)")

    @classmethod
    def from_settings(cls, settings: Optional[PenaltySettings] = None) -> "PenaltyConfig":
        settings = settings or config.penalty
        return cls(**settings.model_dump())

    def scales(self, dimension: int) -> np.ndarray:
        if dimension == 3:
            return np.array([self.phi0, self.psi0, self.r0])
        return np.array([self.phi0, self.r0])


def _locations_matrix(geometry: ArrayGeometry, locations: Locations) -> np.ndarray:
    if isinstance(locations, np.ndarray):
        return np.atleast_2d(locations)
    if len(locations) == 0:
        return np.empty((0, geometry.location_dimension))
    return as_parameter_matrix(geometry, list(locations))


def rls_cost_batch(
    data: np.ndarray,
    params: np.ndarray,
    geometry: ArrayGeometry,
    wavelength: float,
    model: Optional[PhaseModel] = None,
) -> np.ndarray:
    """J_RLS = |Y|_F^2 - |a^H Y|^2 / M for each candidate row of ``params``."""
    energy = float(np.vdot(data, data).real)
    responses = steering_matrix(geometry, params, wavelength, model)
    projections = responses.conj() @ data
    captured = np.einsum("nt,nt->n", projections, projections.conj()).real
    costs = energy - captured / geometry.num_elements
    return np.clip(costs, 0.0, energy)


def rls_cost(
    data: np.ndarray,
    theta: SourceLocation,
    geometry: ArrayGeometry,
    wavelength: float,
    model: Optional[PhaseModel] = None,
) -> float:
    params = as_parameter_matrix(geometry, theta)
    return float(rls_cost_batch(data, params, geometry, wavelength, model)[0])


def rls_cost_explicit(
    data: np.ndarray,
    theta: SourceLocation,
    geometry: ArrayGeometry,
    wavelength: float,
    model: Optional[PhaseModel] = None,
) -> float:
    """J_RLS through a materialized projector, for cross-checking."""
    response = steering_matrix(
        geometry, as_parameter_matrix(geometry, theta), wavelength, model
    )[0]
    residual = data - column_projector(response) @ data
    return float(np.vdot(residual, residual).real)


def normalized_distances(
    params: np.ndarray, detected: np.ndarray, cfg: PenaltyConfig
) -> np.ndarray:
    """(N, K) normalized Euclidean distances between candidates and detected modes."""
    scales = cfg.scales(params.shape[1])
    diff = (params[:, None, :] - detected[None, :, :]) / scales
    return np.sqrt(np.sum(diff**2, axis=-1))


def penalty_batch(
    params: np.ndarray, detected: np.ndarray, cfg: PenaltyConfig
) -> np.ndarray:
    if detected.size == 0:
        return np.zeros(params.shape[0])
    distances = normalized_distances(params, detected, cfg)
    return cfg.alpha * np.maximum(0.0, cfg.delta_min - distances).sum(axis=1)


def penalty(
    theta: SourceLocation, detected: Sequence[SourceLocation], cfg: PenaltyConfig
) -> float:
    """sum_i alpha * max(0, delta_min - |theta - theta_i|_normalized)."""
    if not detected:
        return 0.0
    params = theta.to_vector()[None, :]
    detected_params = np.array([loc.to_vector() for loc in detected])
    return float(penalty_batch(params, detected_params, cfg)[0])


def penalized_rls_cost(
    data: np.ndarray,
    theta: SourceLocation,
    detected: Sequence[SourceLocation],
    cfg: PenaltyConfig,
    geometry: ArrayGeometry,
    wavelength: float,
    model: Optional[PhaseModel] = None,
) -> float:
    return rls_cost(data, theta, geometry, wavelength, model) + penalty(
        theta, detected, cfg
    )


def esf_cost_batch(
    candidates: np.ndarray,
    signal_basis: np.ndarray,
    geometry: ArrayGeometry,
    wavelength: float,
    model: Optional[PhaseModel] = None,
    rank_tol: float = RANK_TOL,
) -> np.ndarray:
    """J_ESF = K - |P_A U_s|_F^2 for each joint candidate row (K * D entries).

    Candidates whose steering matrix is numerically rank deficient cost +inf.
    """
    dimension = geometry.location_dimension
    n = candidates.shape[0]
    k = candidates.shape[1] // dimension
    responses = steering_matrix(
        geometry, candidates.reshape(n * k, dimension), wavelength, model
    )
    basis = responses.reshape(n, k, -1).transpose(0, 2, 1)

    singular_values = np.linalg.svd(basis, compute_uv=False)
    feasible = singular_values[:, -1] > rank_tol * singular_values[:, 0]
    costs = np.full(n, np.inf)
    if not np.any(feasible):
        return costs

    usable = basis[feasible]
    adjoint = usable.conj().transpose(0, 2, 1)
    gram = adjoint @ usable
    cross = adjoint @ signal_basis[None, :, :]
    solved = np.linalg.solve(gram, cross)
    captured = np.einsum("nij,nij->n", cross.conj(), solved).real
    fit = signal_basis.shape[1] - captured
    costs[feasible] = np.clip(fit, 0.0, signal_basis.shape[1])
    return costs


def esf_cost(
    locations: Locations,
    signal_basis: np.ndarray,
    geometry: ArrayGeometry,
    wavelength: float,
    model: Optional[PhaseModel] = None,
) -> float:
    params = _locations_matrix(geometry, locations)
    return float(
        esf_cost_batch(params.reshape(1, -1), signal_basis, geometry, wavelength, model)[0]
    )


def esf_cost_explicit(
    locations: Locations,
    signal_basis: np.ndarray,
    geometry: ArrayGeometry,
    wavelength: float,
    model: Optional[PhaseModel] = None,
) -> float:
    """J_ESF through a materialized projector, for cross-checking."""
    params = _locations_matrix(geometry, locations)
    basis = steering_matrix(geometry, params, wavelength, model).T
    try:
        projector = column_projector(basis)
    except IllConditionedBasisError:
        return float("inf")
    residual = signal_basis - projector @ signal_basis
    return float(np.vdot(residual, residual).real)
