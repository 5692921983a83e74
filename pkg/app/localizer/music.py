"""Grid-search MUSIC over (phi, r) for ULAs and (phi, psi, r) for UPAs."""

import time
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import Field
from scipy import ndimage
from scipy.optimize import minimize

from app.array.geometry import ArrayGeometry, steering_matrix
from app.channel.models import SnapshotMatrix
from app.config import MusicSettings, config
from app.exceptions import InvalidArgumentError
from app.linalg.subspace import noise_subspace, sample_covariance
from app.localizer.base import BaseLocalizer, LocalizationResult
from app.localizer.domain import SearchDomain, SearchGrid
from app.logger import logger
from app.objective.costs import PenaltyConfig
from app.schema import PhaseModel, SourceLocation


GridIndex = Tuple[int, ...]


def _epsilon(geometry: ArrayGeometry) -> float:
    return 1e-12 * geometry.num_elements


def _noise_energy(
    nodes: np.ndarray,
    basis: np.ndarray,
    geometry: ArrayGeometry,
    wavelength: float,
    model: Optional[PhaseModel],
) -> np.ndarray:
    responses = steering_matrix(geometry, nodes, wavelength, model)
    return np.sum(np.abs(responses.conj() @ basis) ** 2, axis=1)


def music_spectrum(
    noise_basis: np.ndarray,
    grid: SearchGrid,
    geometry: ArrayGeometry,
    wavelength: float,
    model: Optional[PhaseModel] = None,
    settings: Optional[MusicSettings] = None,
) -> np.ndarray:
    """1 / (|U_n^H a(theta_g)|^2 + 1e-12 M) on every grid node, shaped like the grid.

    Nodes are evaluated in blocks of ``chunk_size``, spread over ``workers`` threads.
    """
    settings = settings or config.music
    grid.domain.check_geometry(geometry)
    nodes = grid.nodes()
    blocks = [
        nodes[start : start + settings.chunk_size]
        for start in range(0, nodes.shape[0], settings.chunk_size)
    ]

    def evaluate(block: np.ndarray) -> np.ndarray:
        return _noise_energy(block, noise_basis, geometry, wavelength, model)

    if settings.workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=settings.workers) as pool:
            energies = list(pool.map(evaluate, blocks))
    else:
        energies = [evaluate(block) for block in blocks]

    energy = np.concatenate(energies)
    return (1.0 / (energy + _epsilon(geometry))).reshape(grid.shape)


def music_spectrum_from_covariance(
    covariance: np.ndarray,
    k: int,
    grid: SearchGrid,
    geometry: ArrayGeometry,
    wavelength: float,
    model: Optional[PhaseModel] = None,
    settings: Optional[MusicSettings] = None,
) -> np.ndarray:
    """Pseudospectrum with U_n taken as the M - K weakest eigenvectors of R."""
    return music_spectrum(
        noise_subspace(covariance, k), grid, geometry, wavelength, model, settings
    )


def _strict_local_maxima(spectrum: np.ndarray) -> np.ndarray:
    footprint = np.ones((3,) * spectrum.ndim, dtype=bool)
    footprint[(1,) * spectrum.ndim] = False
    neighbours = ndimage.maximum_filter(
        spectrum, footprint=footprint, mode="constant", cval=-np.inf
    )
    return spectrum > neighbours


def pick_peaks(
    spectrum: np.ndarray,
    grid: SearchGrid,
    k: int,
    exclusion_radius: Optional[float] = None,
    penalty_cfg: Optional[PenaltyConfig] = None,
) -> List[GridIndex]:
    """Up to ``k`` peaks by descending value, each outside the others' exclusion balls.

    Candidates are the strict local maxima of the spectrum; distances use the
    normalized metric of the detection penalty and the radius defaults to its
    ``delta_min``. Fewer than ``k`` indices come back when the candidates run out.
    """
    if k < 1:
        raise InvalidArgumentError(f"Peak picking needs K >= 1, got {k}")
    if spectrum.shape != grid.shape:
        raise InvalidArgumentError(
            f"Spectrum shape {spectrum.shape} does not match grid {grid.shape}"
        )
    penalty_cfg = penalty_cfg or PenaltyConfig.from_settings()
    radius = penalty_cfg.delta_min if exclusion_radius is None else exclusion_radius
    scales = penalty_cfg.scales(spectrum.ndim)

    candidates = np.flatnonzero(_strict_local_maxima(spectrum))
    if candidates.size == 0:
        candidates = np.array([int(np.argmax(spectrum))])
    order = candidates[np.argsort(-spectrum.ravel()[candidates], kind="stable")]

    axes = grid.axes
    picked: List[GridIndex] = []
    picked_points: List[np.ndarray] = []
    for flat in order:
        index = tuple(int(i) for i in np.unravel_index(flat, spectrum.shape))
        point = np.array([axis[i] for axis, i in zip(axes, index)]) / scales
        if any(np.linalg.norm(point - other) < radius for other in picked_points):
            continue
        picked.append(index)
        picked_points.append(point)
        if len(picked) == k:
            break
    return picked


def refine_peak(
    index: GridIndex,
    grid: SearchGrid,
    noise_basis: np.ndarray,
    geometry: ArrayGeometry,
    wavelength: float,
    model: Optional[PhaseModel] = None,
    reach: float = 3.0,
) -> Tuple[SourceLocation, float]:
    """Local minimum of |U_n^H a|^2 within ``reach`` cells of a picked node.

    On coarse grids the largest node can sit a few cells away from the peak along
    the tilted angle-range ridge. The search runs in cell units inside the domain
    and the node is kept when the polish does not lower the noise energy.
    """
    cell = grid.cell
    center = grid.node(index).to_vector()
    box = [
        ((low - c) / step, (high - c) / step)
        for (low, high), c, step in zip(grid.domain.bounds(), center, cell)
    ]
    box = [(max(low, -reach), min(high, reach)) for low, high in box]

    def energy(offset: np.ndarray) -> float:
        node = (center + offset * cell)[None, :]
        return float(_noise_energy(node, noise_basis, geometry, wavelength, model)[0])

    start = np.zeros(center.shape[0])
    start_energy = energy(start)
    simplex = [start]
    for axis, (low, high) in enumerate(box):
        vertex = start.copy()
        vertex[axis] = 0.5 if high >= 0.5 else -0.5
        simplex.append(vertex)
    result = minimize(
        energy,
        start,
        method="Nelder-Mead",
        bounds=box,
        options={
            "initial_simplex": np.array(simplex),
            "xatol": 1e-9,
            "fatol": 1e-18,
            "maxiter": 400 * start.shape[0],
        },
    )
    if result.fun < start_energy:
        return SourceLocation.from_vector(center + result.x * cell), float(result.fun)
    return grid.node(index), start_energy


def spectrum_frame(spectrum: np.ndarray, grid: SearchGrid) -> pd.DataFrame:
    """Long-form table phi_deg, r_m[, psi_deg], value for external plotting."""
    nodes = grid.nodes()
    columns = {"phi_deg": np.degrees(nodes[:, 0]), "r_m": nodes[:, -1]}
    if grid.psi_points is not None:
        columns["psi_deg"] = np.degrees(nodes[:, 1])
    columns["value"] = spectrum.ravel()
    return pd.DataFrame(columns)


def music_localize(
    snapshots: SnapshotMatrix,
    k: int,
    grid: Optional[SearchGrid] = None,
    phase_model: Optional[PhaseModel] = None,
    settings: Optional[MusicSettings] = None,
    exclusion_radius: Optional[float] = None,
) -> LocalizationResult:
    """Estimates of ``k`` sources from the MUSIC pseudospectrum.

    Estimates are grid nodes unless ``settings.refine`` polishes them with
    ``refine_peak``.
    """
    geometry, wavelength = snapshots.geometry, snapshots.wavelength
    if not 1 <= k < geometry.num_elements:
        raise InvalidArgumentError(f"MUSIC needs 1 <= K < M={geometry.num_elements}, got {k}")
    started = time.perf_counter()
    settings = settings or config.music
    grid = grid or SearchGrid.from_settings(
        SearchDomain.default(geometry, wavelength), settings
    )

    basis = noise_subspace(sample_covariance(snapshots.data), k)
    spectrum = music_spectrum(basis, grid, geometry, wavelength, phase_model, settings)
    peaks = pick_peaks(spectrum, grid, k, exclusion_radius)
    if settings.refine:
        polished = [
            refine_peak(
                index, grid, basis, geometry, wavelength, phase_model, settings.refine_reach
            )
            for index in peaks
        ]
        estimates = [location for location, _ in polished]
        costs = [energy for _, energy in polished]
    else:
        epsilon = _epsilon(geometry)
        estimates = [grid.node(index) for index in peaks]
        costs = [float(1.0 / spectrum[index] - epsilon) for index in peaks]

    abort_reason = None
    if len(peaks) < k:
        abort_reason = f"Found only {len(peaks)} of {k} separable peaks"
        logger.warning(f"MUSIC shortfall on grid {grid.describe()}: {abort_reason}")

    runtime = time.perf_counter() - started
    logger.info(
        f"MUSIC located {len(peaks)}/{k} sources on a {grid.describe()} grid "
        f"in {runtime:.3f}s"
    )
    return LocalizationResult(
        method="music",
        requested=k,
        estimates=estimates,
        per_source_cost=costs,
        runtime=runtime,
        abort_reason=abort_reason,
    )


class MusicLocalizer(BaseLocalizer):
    """Object form of ``music_localize``; ``grid_spec`` like '200x1000' overrides settings."""

    grid_spec: Optional[str] = Field(None, description="AxB or AxBxC grid resolution")
    settings: Optional[MusicSettings] = None
    exclusion_radius: Optional[float] = Field(None, ge=0)

    def grid_for(self, snapshots: SnapshotMatrix) -> SearchGrid:
        domain = self.domain or SearchDomain.default(
            snapshots.geometry, snapshots.wavelength
        )
        if self.grid_spec:
            return SearchGrid.from_spec(domain, self.grid_spec)
        return SearchGrid.from_settings(domain, self.settings)

    def localize(self, snapshots: SnapshotMatrix, k: int) -> LocalizationResult:
        return music_localize(
            snapshots,
            k,
            grid=self.grid_for(snapshots),
            phase_model=self.phase_model,
            settings=self.settings,
            exclusion_radius=self.exclusion_radius,
        )
