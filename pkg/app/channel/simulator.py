"""Source signals, LoS/Rician channels and noisy snapshot matrices Y = AS + N."""

import math
from typing import Optional, Protocol, runtime_checkable

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from app.array.geometry import (
    ArrayGeometry,
    LocationLike,
    as_parameter_matrix,
    steering_matrix,
    steering_vector,
)
from app.channel.models import (
    ChannelKind,
    ChannelModel,
    CorrelationKind,
    Scenario,
    SnapshotMatrix,
    snr_to_power,
)
from app.exceptions import InvalidArgumentError
from app.logger import logger
from app.rng import complex_normal, make_rng
from app.schema import PhaseModel


PSD_TOLERANCE = 1e-10
SCATTERING_NODES = 512
SCATTERING_WIDTH = 6.0  # integration half-width in standard deviations


class CorrelationResult(BaseModel):
    """NLoS spatial correlation matrix with its PSD diagnostics."""

    matrix: np.ndarray = Field(..., description="M x M Hermitian PSD matrix")
    clipped: bool = Field(False, description="Negative eigenvalues were floored at 0")
    min_eigenvalue: float = Field(..., description="Smallest eigenvalue before clipping")

    model_config = ConfigDict(arbitrary_types_allowed=True)


@runtime_checkable
class CorrelationProvider(Protocol):
    """Supplies the NLoS correlation matrix for a source, None meaning identity."""

    def __call__(
        self,
        geometry: ArrayGeometry,
        loc: LocationLike,
        wavelength: float,
        phase_model: Optional[PhaseModel] = None,
    ) -> Optional[np.ndarray]:
        ...


class IIDCorrelation:
    """Uncorrelated Rayleigh scattering (identity correlation)."""

    def __call__(self, geometry, loc, wavelength, phase_model=None):
        return None


class LocalScatteringCorrelation:
    """Gaussian angular spread of scatterers around the source azimuth."""

    def __init__(self, angular_spread: float):
        self.angular_spread = angular_spread

    def __call__(self, geometry, loc, wavelength, phase_model=None):
        return local_scattering_correlation(
            geometry, loc, self.angular_spread, wavelength, phase_model
        ).matrix


def correlation_provider_for(channel: ChannelModel) -> CorrelationProvider:
    if channel.correlation is CorrelationKind.LOCAL_SCATTERING:
        return LocalScatteringCorrelation(channel.angular_spread)
    return IIDCorrelation()


def local_scattering_correlation(
    geometry: ArrayGeometry,
    loc: LocationLike,
    angular_spread: float,
    wavelength: float,
    phase_model: Optional[PhaseModel] = None,
    nodes: int = SCATTERING_NODES,
) -> CorrelationResult:
    """Correlation E[a a^H] with the azimuth perturbed by a Gaussian of std ``angular_spread``.

    The angular density is truncated to (-pi/2, pi/2) and integrated on ``nodes``
    equispaced points spanning +/- 6 standard deviations around the source azimuth.
    The result is Hermitian with unit diagonal and trace M; slightly negative
    eigenvalues from round-off are floored at zero and flagged.
    """
    if not angular_spread > 0:
        raise InvalidArgumentError(
            f"Angular spread must be positive, got {angular_spread}"
        )
    center = as_parameter_matrix(geometry, loc)[0]
    phi = center[0]
    low = max(-math.pi / 2, phi - SCATTERING_WIDTH * angular_spread)
    high = min(math.pi / 2, phi + SCATTERING_WIDTH * angular_spread)
    angles = np.linspace(low, high, nodes)
    weights = np.exp(-0.5 * ((angles - phi) / angular_spread) ** 2)
    weights /= weights.sum()

    params = np.repeat(center[None, :], nodes, axis=0)
    params[:, 0] = angles
    responses = steering_matrix(geometry, params, wavelength, phase_model)
    matrix = (responses.T * weights) @ responses.conj()
    matrix = 0.5 * (matrix + matrix.conj().T)

    eigenvalues, eigenvectors = np.linalg.eigh(matrix)
    min_eigenvalue = float(eigenvalues[0])
    clipped = min_eigenvalue < -PSD_TOLERANCE
    if clipped:
        logger.warning(
            f"Clipped local scattering correlation to PSD (min eigenvalue {min_eigenvalue:.3e})"
        )
        eigenvalues = np.clip(eigenvalues, 0.0, None)
        matrix = (eigenvectors * eigenvalues) @ eigenvectors.conj().T
        scale = 1.0 / np.sqrt(np.real(np.diag(matrix)))
        matrix = matrix * np.outer(scale, scale)
    return CorrelationResult(matrix=matrix, clipped=clipped, min_eigenvalue=min_eigenvalue)


def _correlated_normal(
    rng: np.random.Generator, correlation: Optional[np.ndarray], m: int
) -> np.ndarray:
    z = complex_normal(rng, m)
    if correlation is None:
        return z
    eigenvalues, eigenvectors = np.linalg.eigh(correlation)
    root = eigenvectors * np.sqrt(np.clip(eigenvalues, 0.0, None))
    return root @ z


def rician_channel(
    geometry: ArrayGeometry,
    loc: LocationLike,
    wavelength: float,
    model: ChannelModel,
    rng: np.random.Generator,
    phase_model: Optional[PhaseModel] = None,
    correlation: Optional[CorrelationProvider] = None,
) -> np.ndarray:
    """Unit path-loss channel sqrt(k/(k+1)) a + sqrt(1/(k+1)) h_nlos.

    The NLoS term is circularly-symmetric complex Gaussian with covariance
    normalized to trace M, so E[|h|^2] = M for every kappa.
    """
    h_los = steering_vector(geometry, loc, wavelength, phase_model)
    if model.kind is ChannelKind.PURE_LOS:
        return h_los
    provider = correlation or correlation_provider_for(model)
    r_nlos = provider(geometry, loc, wavelength, phase_model)
    if r_nlos is not None:
        r_nlos = r_nlos * (geometry.num_elements / np.trace(r_nlos).real)
    h_nlos = _correlated_normal(rng, r_nlos, geometry.num_elements)
    kappa = model.kappa
    return math.sqrt(kappa / (kappa + 1.0)) * h_los + math.sqrt(1.0 / (kappa + 1.0)) * h_nlos


def simulate_snapshots(
    scenario: Scenario, rng: Optional[np.random.Generator] = None
) -> SnapshotMatrix:
    """Draw Y = sum_k sqrt(beta_k) h_k s_k^T + N for one scenario.

    Symbols are i.i.d. unit-power complex Gaussian, noise has variance
    ``scenario.noise_variance`` per entry and beta_k = 10^(SNR_k/10).
    """
    rng = rng if rng is not None else make_rng(scenario.seed)
    geometry = scenario.geometry
    m, t = geometry.num_elements, scenario.snapshots
    phase_model = scenario.resolved_phase_model
    provider = correlation_provider_for(scenario.channel)

    data = np.zeros((m, t), dtype=np.complex128)
    for source in scenario.sources:
        h = rician_channel(
            geometry,
            source.location,
            scenario.wavelength,
            scenario.channel,
            rng,
            phase_model,
            provider,
        )
        symbols = complex_normal(rng, t)
        data += math.sqrt(snr_to_power(source.snr_db)) * np.outer(h, symbols)

    noise = complex_normal(rng, (m, t))
    if scenario.noise_variance > 0:
        data += math.sqrt(scenario.noise_variance) * noise

    return SnapshotMatrix(
        data=data,
        geometry=geometry,
        wavelength=scenario.wavelength,
        truth=scenario.locations,
    )
