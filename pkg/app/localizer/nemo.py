"""Sequential multimodal localization: search, deflate, penalize, repeat."""

import math
import time
from typing import List, Optional, Tuple

import numpy as np
from pydantic import Field
from scipy.optimize import minimize

from app.array.geometry import steering_vector
from app.channel.models import SnapshotMatrix
from app.config import NemoSettings, config
from app.exceptions import DeflationError, InvalidArgumentError
from app.linalg.subspace import noise_power, residual_project, sample_covariance
from app.localizer.base import BaseLocalizer, LocalizationResult
from app.localizer.domain import SearchDomain
from app.logger import logger
from app.objective.costs import PenaltyConfig, penalty_batch, rls_cost, rls_cost_batch
from app.optimizer.de import DEConfig, DERunResult, run_de
from app.schema import PhaseModel, SourceLocation


def _refine(
    objective, start: np.ndarray, start_cost: float, bounds: List[Tuple[float, float]]
) -> Tuple[np.ndarray, float]:
    """Bounded Nelder-Mead polish, kept only if it lowers the cost."""
    result = minimize(
        lambda x: float(objective(x[None, :])[0]),
        start,
        method="Nelder-Mead",
        bounds=bounds,
        options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 400 * start.shape[0]},
    )
    if result.fun < start_cost:
        return np.asarray(result.x, dtype=float), float(result.fun)
    return start, start_cost


def nemo_de(
    snapshots: SnapshotMatrix,
    k: int,
    domain: Optional[SearchDomain] = None,
    de_config: Optional[DEConfig] = None,
    penalty_cfg: Optional[PenaltyConfig] = None,
    settings: Optional[NemoSettings] = None,
    phase_model: Optional[PhaseModel] = None,
    seed: int = 0,
) -> LocalizationResult:
    """Detect up to ``k`` sources with K sequential DE runs on the penalized RLS cost.

    After each accepted detection the data is deflated by the detected steering vector
    and the detection joins the penalty set. Detection stops early when the residual
    energy is exhausted, when a detection removes less than ``min_residual_reduction``
    of the current residual energy, or when the energy it captures is no larger than
    what a pure-noise direction can capture. That noise floor is
    ``noise_margin * T * sigma^2 * (1 + sqrt(M / T))^2`` with sigma^2 the mean of the
    M - K weakest eigenvalues of the sample covariance.
    """
    if k < 1:
        raise InvalidArgumentError(f"NEMO-DE needs K >= 1, got {k}")
    started = time.perf_counter()
    geometry, wavelength = snapshots.geometry, snapshots.wavelength
    domain = domain or SearchDomain.default(geometry, wavelength)
    domain.check_geometry(geometry)
    settings = settings or config.nemo
    penalty_cfg = penalty_cfg or PenaltyConfig.from_settings()
    bounds = domain.bounds()
    de_config = (
        de_config.with_bounds(bounds)
        if de_config is not None
        else DEConfig.from_settings(bounds, seed=seed)
    )

    data = snapshots.data.copy()
    num_elements, num_snapshots = data.shape
    noise_floor = 0.0
    if settings.noise_margin > 0:
        sigma2 = noise_power(
            sample_covariance(snapshots.data), min(k, num_elements - 1)
        )
        edge = (1.0 + math.sqrt(num_elements / num_snapshots)) ** 2
        noise_floor = settings.noise_margin * num_snapshots * sigma2 * edge
        logger.debug(f"NEMO-DE noise floor {noise_floor:.4e} (sigma^2 {sigma2:.4e})")
    initial_energy = snapshots.energy
    residual_energies = [initial_energy]
    detected: List[SourceLocation] = []
    costs: List[float] = []
    traces: List[DERunResult] = []
    aborted, abort_reason = False, None

    for index in range(k):
        current_energy = residual_energies[-1]
        if current_energy <= settings.residual_floor * initial_energy:
            aborted = True
            abort_reason = (
                f"Residual energy exhausted after {index} detections "
                f"({current_energy:.3e} of {initial_energy:.3e})"
            )
            break

        detected_params = np.array([loc.to_vector() for loc in detected]).reshape(
            -1, domain.dimension
        )

        def objective(candidates: np.ndarray, data=data, detected_params=detected_params):
            return rls_cost_batch(
                data, candidates, geometry, wavelength, phase_model
            ) + penalty_batch(candidates, detected_params, penalty_cfg)

        run = run_de(objective, de_config, vectorized=True, run_index=index)
        best, best_cost = run.best_vector, run.best_cost
        if settings.refine:
            best, best_cost = _refine(objective, best, best_cost, bounds)
        theta = SourceLocation.from_vector(best)

        fit = rls_cost(data, theta, geometry, wavelength, phase_model)
        if current_energy > 0 and fit / current_energy > 1.0 - settings.min_residual_reduction:
            aborted = True
            abort_reason = (
                f"Detection {index + 1} removed only "
                f"{100.0 * (1.0 - fit / current_energy):.3g}% of the residual energy"
            )
            break
        captured = current_energy - fit
        if noise_floor > 0 and captured <= noise_floor:
            aborted = True
            abort_reason = (
                f"Detection {index + 1} captured {captured:.3e}, "
                f"within the noise floor {noise_floor:.3e}"
            )
            break

        data = residual_project(
            data, steering_vector(geometry, theta, wavelength, phase_model)
        )
        new_energy = float(np.vdot(data, data).real)
        if new_energy > current_energy * (1.0 + 1e-9):
            raise DeflationError(
                f"Deflation raised the residual energy from {current_energy:.6e} "
                f"to {new_energy:.6e}",
                current_energy,
                new_energy,
            )
        logger.debug(
            f"NEMO-DE detection {index + 1}: phi={theta.phi_deg:.3f} deg, "
            f"r={theta.range:.4f} m, residual {current_energy:.4e} -> {new_energy:.4e}"
        )

        residual_energies.append(new_energy)
        detected.append(theta)
        costs.append(best_cost)
        traces.append(run)

    if aborted:
        logger.warning(f"NEMO-DE stopped early: {abort_reason}")
    runtime = time.perf_counter() - started
    logger.info(f"NEMO-DE located {len(detected)}/{k} sources in {runtime:.3f}s")
    return LocalizationResult(
        method="nemo",
        requested=k,
        estimates=detected,
        per_source_cost=costs,
        traces=traces,
        residual_energies=residual_energies,
        runtime=runtime,
        aborted=aborted,
        abort_reason=abort_reason,
    )


class NemoDELocalizer(BaseLocalizer):
    """Object form of ``nemo_de``."""

    de_config: Optional[DEConfig] = None
    penalty: Optional[PenaltyConfig] = None
    settings: Optional[NemoSettings] = Field(None, description="Quality gate and refine")

    def localize(self, snapshots: SnapshotMatrix, k: int) -> LocalizationResult:
        return nemo_de(
            snapshots,
            k,
            domain=self.domain,
            de_config=self.de_config,
            penalty_cfg=self.penalty,
            settings=self.settings,
            phase_model=self.phase_model,
            seed=self.seed,
        )
