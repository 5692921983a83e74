"""DE/rand/1/bin over box-constrained real vectors.

Randomness is drawn from a Philox substream per (run, generation); all mutations and
crossovers of a generation are drawn serially before the objective is evaluated, so a
run is reproducible for a fixed seed whatever the evaluation parallelism.
"""

from concurrent.futures import Executor, ThreadPoolExecutor
from pathlib import Path
from typing import Callable, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.config import DESettings, NeefSettings, config
from app.exceptions import BenchmarkIOError, InvalidArgumentError
from app.logger import logger
from app.rng import SEED_LIMIT, make_rng


Bounds = List[Tuple[float, float]]
Objective = Callable[[np.ndarray], Union[float, np.ndarray]]


class ConvergenceConfig(BaseModel):
    """Stop once the best cost improved by less than ``tol`` over ``patience`` generations."""

    tol: float = Field(1e-10, ge=0)
    patience: int = Field(50, ge=1)


class DEConfig(BaseModel):
    population_size: int = Field(50, ge=4, description="Population size Np")
    max_generations: int = Field(300, ge=1, description="Generations Gmax")
    F: float = Field(0.5, ge=0, le=2, description="Mutation scaling factor")
    Cr: float = Field(0.8, ge=0, le=1, description="Crossover probability")
    bounds: Bounds = Field(..., min_length=1, description="(low, high) per dimension")
    seed: int = Field(0, ge=0, lt=SEED_LIMIT, description="64-bit seed")
    convergence: Optional[ConvergenceConfig] = Field(
        None, description="Early stopping; None runs all generations"
    )
    workers: int = Field(1, ge=1, description="Threads for per-candidate evaluation")

    @field_validator("bounds")
    @classmethod
    def _check_bounds(cls, bounds: Bounds) -> Bounds:
        for dim, (low, high) in enumerate(bounds):
            if not low < high:
                raise ValueError(f"Bound {dim} must satisfy low < high, got ({low}, {high})")
        return bounds

    @classmethod
    def from_settings(
        cls,
        bounds: Bounds,
        seed: int = 0,
        settings: Optional[DESettings] = None,
        **overrides,
    ) -> "DEConfig":
        settings = settings or config.de
        values = settings.model_dump()
        values.update(overrides)
        return cls(bounds=bounds, seed=seed, **values)

    @classmethod
    def for_joint_search(
        cls,
        bounds: Bounds,
        num_sources: int,
        seed: int = 0,
        settings: Optional[NeefSettings] = None,
        **overrides,
    ) -> "DEConfig":
        """Np = population_per_source * K; early stopping only when the settings ask for it."""
        settings = settings or config.neef
        values = config.de.model_dump()
        values.update(
            population_size=settings.population_per_source * num_sources,
            max_generations=settings.max_generations,
            convergence=(
                ConvergenceConfig(tol=settings.tol, patience=settings.patience)
                if settings.early_stop
                else None
            ),
        )
        values.update(overrides)
        return cls(bounds=bounds, seed=seed, **values)

    def with_bounds(self, bounds: Bounds) -> "DEConfig":
        return self.model_validate({**self.model_dump(), "bounds": bounds})

    @property
    def dimension(self) -> int:
        return len(self.bounds)

    @property
    def lower(self) -> np.ndarray:
        return np.array([low for low, _ in self.bounds], dtype=float)

    @property
    def upper(self) -> np.ndarray:
        return np.array([high for _, high in self.bounds], dtype=float)


class DERunResult(BaseModel):
    """Outcome of one DE run; ``trace[g]`` is the best cost after generation g (0 = init)."""

    best_vector: np.ndarray
    best_cost: float
    trace: List[float] = Field(default_factory=list)
    mean_trace: List[float] = Field(default_factory=list)
    evaluations: int = 0
    generations: int = 0

    model_config = ConfigDict(arbitrary_types_allowed=True)

    @model_validator(mode="after")
    def _monotone_trace(self) -> "DERunResult":
        if any(b > a for a, b in zip(self.trace, self.trace[1:])):
            raise ValueError("Best-cost trace must be non-increasing")
        return self

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "generation": np.arange(len(self.trace)),
                "best_cost": self.trace,
                "mean_cost": self.mean_trace,
            }
        )

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            self.to_frame().to_csv(path, index=False)
        except OSError as e:
            raise BenchmarkIOError(f"Failed to write DE trace {path}: {e}") from None
        return path


def init_population(config: DEConfig, rng: np.random.Generator) -> np.ndarray:
    """Np x D matrix, each entry uniform within its dimension's bounds."""
    return rng.uniform(
        config.lower, config.upper, size=(config.population_size, config.dimension)
    )


def reflect_into_bounds(
    vector: np.ndarray, lower: np.ndarray, upper: np.ndarray
) -> np.ndarray:
    """Mirror each out-of-box component at the violated bound until it is inside."""
    width = upper - lower
    folded = np.mod(vector - lower, 2.0 * width)
    folded = np.where(folded > width, 2.0 * width - folded, folded)
    return lower + folded


def _distinct_indices(rng: np.random.Generator, size: int, exclude: int) -> List[int]:
    picks: List[int] = []
    while len(picks) < 3:
        candidate = int(rng.integers(size))
        if candidate != exclude and candidate not in picks:
            picks.append(candidate)
    return picks


def rand1_vector(
    base: np.ndarray, plus: np.ndarray, minus: np.ndarray, F: float
) -> np.ndarray:
    return base + F * (plus - minus)


def mutate_rand1(
    population: np.ndarray,
    i: int,
    F: float,
    rng: np.random.Generator,
    bounds: Optional[Tuple[np.ndarray, np.ndarray]] = None,
) -> np.ndarray:
    """v = x_r1 + F (x_r2 - x_r3) with r1, r2, r3 distinct and different from i."""
    size = population.shape[0]
    if size < 4:
        raise InvalidArgumentError(f"DE/rand/1 needs at least 4 individuals, got {size}")
    r1, r2, r3 = _distinct_indices(rng, size, i)
    mutant = rand1_vector(population[r1], population[r2], population[r3], F)
    if bounds is not None:
        mutant = reflect_into_bounds(mutant, *bounds)
    return mutant


def binomial_crossover(
    target: np.ndarray, mutant: np.ndarray, Cr: float, rng: np.random.Generator
) -> np.ndarray:
    dimension = target.shape[0]
    take = rng.random(dimension) <= Cr
    take[int(rng.integers(dimension))] = True
    return np.where(take, mutant, target)


def _as_cost(value: float) -> float:
    value = float(value)
    return np.inf if np.isnan(value) else value


def select_greedy(
    target: np.ndarray, trial: np.ndarray, cost_target: float, cost_trial: float
) -> Tuple[np.ndarray, float]:
    """Keep the trial iff it is no worse; NaN costs count as +inf."""
    cost_target, cost_trial = _as_cost(cost_target), _as_cost(cost_trial)
    if cost_trial <= cost_target:
        return trial, cost_trial
    return target, cost_target


def _evaluate(
    objective: Objective,
    candidates: np.ndarray,
    vectorized: bool,
    executor: Optional[Executor],
) -> np.ndarray:
    if vectorized:
        costs = np.asarray(objective(candidates), dtype=float).reshape(-1)
        if costs.shape[0] != candidates.shape[0]:
            raise InvalidArgumentError(
                f"Batch objective returned {costs.shape[0]} costs for "
                f"{candidates.shape[0]} candidates"
            )
    elif executor is not None:
        costs = np.fromiter(
            executor.map(objective, candidates), dtype=float, count=candidates.shape[0]
        )
    else:
        costs = np.array([objective(c) for c in candidates], dtype=float)
    return np.where(np.isnan(costs), np.inf, costs)


def _converged(trace: List[float], convergence: Optional[ConvergenceConfig]) -> bool:
    if convergence is None or len(trace) <= convergence.patience:
        return False
    before, now = trace[-1 - convergence.patience], trace[-1]
    if not np.isfinite(before):
        return False
    return before - now < convergence.tol


def _finite_mean(costs: np.ndarray) -> float:
    finite = costs[np.isfinite(costs)]
    return float(finite.mean()) if finite.size else float("inf")


def run_de(
    objective: Objective,
    config: DEConfig,
    *,
    vectorized: bool = False,
    run_index: int = 0,
    executor: Optional[Executor] = None,
) -> DERunResult:
    """Minimize ``objective`` over ``config.bounds``.

    With ``vectorized`` the objective maps an (N, D) matrix to N costs in one call;
    otherwise it is called per candidate, on ``executor`` (or a pool of
    ``config.workers`` threads) when given. ``run_index`` selects an independent
    random substream for repeated runs sharing one seed.
    """
    if executor is None and not vectorized and config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            return run_de(
                objective, config, vectorized=False, run_index=run_index, executor=pool
            )

    lower, upper = config.lower, config.upper
    size = config.population_size
    population = init_population(config, make_rng(config.seed, run_index, 0))
    costs = _evaluate(objective, population, vectorized, executor)
    evaluations = size
    trace = [float(costs.min())]
    mean_trace = [_finite_mean(costs)]

    generation = 0
    for generation in range(1, config.max_generations + 1):
        rng = make_rng(config.seed, run_index, generation)
        trials = np.empty_like(population)
        for i in range(size):
            mutant = mutate_rand1(population, i, config.F, rng, (lower, upper))
            trials[i] = binomial_crossover(population[i], mutant, config.Cr, rng)

        trial_costs = _evaluate(objective, trials, vectorized, executor)
        evaluations += size
        for i in range(size):
            population[i], costs[i] = select_greedy(
                population[i], trials[i], costs[i], trial_costs[i]
            )

        trace.append(float(costs.min()))
        mean_trace.append(_finite_mean(costs))
        if _converged(trace, config.convergence):
            break

    best = int(np.argmin(costs))
    result = DERunResult(
        best_vector=population[best].copy(),
        best_cost=trace[-1],
        trace=trace,
        mean_trace=mean_trace,
        evaluations=evaluations,
        generations=generation,
    )
    logger.debug(
        f"DE run {run_index}: {result.generations} generations, "
        f"best cost {result.best_cost:.6e}, {result.evaluations} evaluations"
    )
    return result
