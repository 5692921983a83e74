import numpy as np
import pandas as pd
import pytest
from pydantic import ValidationError

from app.config import NeefSettings
from app.exceptions import InvalidArgumentError
from app.optimizer.de import (
    ConvergenceConfig,
    DEConfig,
    DERunResult,
    _distinct_indices,
    binomial_crossover,
    init_population,
    mutate_rand1,
    rand1_vector,
    reflect_into_bounds,
    run_de,
    select_greedy,
)
from app.rng import make_rng


CENTER = np.array([1.0, -2.0, 0.5])


def sphere_batch(candidates):
    return np.sum(candidates**2, axis=1)


def shifted_sphere_batch(candidates):
    return np.sum((candidates - CENTER) ** 2, axis=1)


def rastrigin_batch(candidates):
    return 10.0 * candidates.shape[1] + np.sum(
        candidates**2 - 10.0 * np.cos(2 * np.pi * candidates), axis=1
    )


@pytest.fixture
def box3():
    """Three-dimensional symmetric box."""
    return [(-5.0, 5.0)] * 3


def test_init_population_is_uniform_and_reproducible():
    """Tests bounds, first two moments and seed determinism of the initial population."""
    cfg = DEConfig(population_size=100000, bounds=[(-1.0, 1.0), (10.0, 11.0)])
    population = init_population(cfg, make_rng(5, 0, 0))

    assert population.shape == (100000, 2)
    assert np.all(population >= cfg.lower) and np.all(population <= cfg.upper)
    assert population[:, 0].mean() == pytest.approx(0.0, abs=0.02)
    assert population[:, 0].var() == pytest.approx(1.0 / 3.0, rel=0.05)
    np.testing.assert_array_equal(population, init_population(cfg, make_rng(5, 0, 0)))


def test_config_validation():
    """Tests population and bound checks."""
    with pytest.raises(ValidationError):
        DEConfig(population_size=3, bounds=[(0.0, 1.0)])
    with pytest.raises(ValidationError, match="low < high"):
        DEConfig(bounds=[(0.0, 1.0), (2.0, 2.0)])
    with pytest.raises(ValidationError):
        DEConfig(bounds=[])


def test_joint_search_config_scales_population():
    """Tests Np = population_per_source * K over the full generation budget."""
    settings = NeefSettings(population_per_source=40, max_generations=500)
    cfg = DEConfig.for_joint_search([(0.0, 1.0)] * 6, 3, seed=9, settings=settings)
    assert cfg.population_size == 120
    assert cfg.max_generations == 500
    assert cfg.convergence is None
    assert cfg.with_bounds([(0.0, 2.0)] * 6).upper.tolist() == [2.0] * 6


def test_joint_search_early_stop_is_opt_in():
    """Tests that early stopping is attached only when enabled."""
    assert NeefSettings().early_stop is False
    settings = NeefSettings(early_stop=True, tol=1e-10, patience=50)
    cfg = DEConfig.for_joint_search([(0.0, 1.0)] * 4, 2, settings=settings)
    assert cfg.convergence == ConvergenceConfig(tol=1e-10, patience=50)


def test_rand1_vector():
    """Tests v = x_r1 + F (x_r2 - x_r3) on fixed vectors."""
    base, plus, minus = np.array([1.0, 2.0]), np.array([3.0, 4.0]), np.array([5.0, 6.0])
    np.testing.assert_array_equal(rand1_vector(base, plus, minus, 0.5), [0.0, 1.0])
    np.testing.assert_array_equal(rand1_vector(base, plus, minus, 0.0), base)


def test_mutation_of_identical_population_is_the_shared_vector():
    """Tests that difference vectors vanish when all individuals coincide."""
    population = np.tile([0.3, -0.7], (6, 1))
    mutant = mutate_rand1(population, 2, 0.9, make_rng(1))
    np.testing.assert_allclose(mutant, [0.3, -0.7])


def test_mutation_picks_distinct_indices(rng):
    """Tests that r1, r2, r3 are distinct and never the target index."""
    for _ in range(200):
        picks = _distinct_indices(rng, 5, exclude=2)
        assert len(set(picks)) == 3 and 2 not in picks

    # F = 0 leaves the base vector, which must never be the target row
    population = np.arange(5, dtype=float)[:, None]
    bases = {float(mutate_rand1(population, 0, 0.0, rng)[0]) for _ in range(200)}
    assert bases == {1.0, 2.0, 3.0, 4.0}


def test_mutation_needs_four_individuals():
    """Tests the population-size guard."""
    with pytest.raises(InvalidArgumentError, match="at least 4"):
        mutate_rand1(np.zeros((3, 2)), 0, 0.5, make_rng(0))


def test_binomial_crossover(rng):
    """Tests Cr = 1, Cr = 0 and the component share at Cr = 0.5."""
    target, mutant = np.zeros(1000), np.ones(1000)
    np.testing.assert_array_equal(binomial_crossover(target, mutant, 1.0, rng), mutant)
    assert binomial_crossover(target, mutant, 0.0, rng).sum() == 1.0
    assert binomial_crossover(target, mutant, 0.5, rng).mean() == pytest.approx(0.5, abs=0.05)


def test_select_greedy_with_ties_and_nan():
    """Tests the <= acceptance rule and NaN costs counting as +inf."""
    target, trial = np.array([0.0]), np.array([1.0])
    assert select_greedy(target, trial, 1.0, 1.0)[0] is trial
    assert select_greedy(target, trial, 1.0, 2.0)[0] is target
    assert select_greedy(target, trial, 1.0, float("nan"))[0] is target
    chosen, cost = select_greedy(target, trial, float("nan"), 5.0)
    assert chosen is trial and cost == 5.0


def test_reflection_into_bounds():
    """Tests mirroring at the violated bound, including repeated folds."""
    lower, upper = np.zeros(4), np.ones(4)
    reflected = reflect_into_bounds(np.array([1.3, -0.2, 2.5, 0.4]), lower, upper)
    np.testing.assert_allclose(reflected, [0.7, 0.2, 0.5, 0.4])


def test_quadratic_converges_to_its_center(box3):
    """Tests that a shifted convex quadratic is minimized to high precision."""
    cfg = DEConfig(population_size=50, max_generations=300, F=0.5, Cr=0.9, bounds=box3, seed=3)
    result = run_de(shifted_sphere_batch, cfg, vectorized=True)
    np.testing.assert_allclose(result.best_vector, CENTER, atol=1e-6)
    assert result.evaluations == 50 * 301
    assert len(result.trace) == result.generations + 1


def test_constant_objective_runs_to_the_generation_limit(box3):
    """Tests a flat landscape without early stopping."""
    cfg = DEConfig(population_size=8, max_generations=12, bounds=box3, seed=0)
    result = run_de(lambda x: 4.0, cfg)
    assert result.generations == 12
    assert result.trace == [4.0] * 13
    assert np.all(np.abs(result.best_vector) <= 5.0)


def test_early_stopping(box3):
    """Tests that a stalled best cost ends the run after ``patience`` generations."""
    cfg = DEConfig(
        population_size=8,
        max_generations=100,
        bounds=box3,
        convergence=ConvergenceConfig(tol=1e-12, patience=5),
    )
    result = run_de(lambda x: 1.0, cfg)
    assert result.generations == 5
    assert len(result.trace) == 6


def test_rastrigin_finds_the_global_minimum_in_most_runs():
    """Tests a multimodal benchmark over twenty independent substreams."""
    cfg = DEConfig(
        population_size=50, max_generations=300, F=0.5, Cr=0.3, bounds=[(-5.0, 5.0)] * 2, seed=11
    )
    hits = 0
    for run in range(20):
        result = run_de(rastrigin_batch, cfg, vectorized=True, run_index=run)
        assert all(b <= a for a, b in zip(result.trace, result.trace[1:]))
        hits += result.best_cost < 1e-3
    assert hits >= 18


def test_result_is_independent_of_worker_count(box3):
    """Tests bit-identical runs for serial and threaded evaluation."""

    def sphere(x):
        return float(x @ x)

    cfg = DEConfig(population_size=12, max_generations=40, bounds=box3, seed=21)
    serial = run_de(sphere, cfg)
    threaded = run_de(sphere, cfg.model_copy(update={"workers": 4}))

    np.testing.assert_array_equal(serial.best_vector, threaded.best_vector)
    assert serial.trace == threaded.trace
    assert run_de(sphere, cfg, run_index=1).trace != serial.trace


def test_nan_costs_never_win(box3):
    """Tests that NaN evaluations are treated as +inf."""

    def partly_nan(candidates):
        costs = sphere_batch(candidates)
        costs[candidates[:, 0] > 0] = np.nan
        return costs

    cfg = DEConfig(population_size=20, max_generations=30, bounds=box3, seed=2)
    result = run_de(partly_nan, cfg, vectorized=True)
    assert np.isfinite(result.best_cost)
    assert result.best_vector[0] <= 0


def test_batch_objective_must_return_one_cost_per_candidate(box3):
    """Tests the batch length check."""
    cfg = DEConfig(population_size=6, max_generations=2, bounds=box3)
    with pytest.raises(InvalidArgumentError, match="returned 1 costs"):
        run_de(lambda x: np.array([0.0]), cfg, vectorized=True)


def test_trace_csv(tmp_path, box3):
    """Tests the per-generation trace export."""
    cfg = DEConfig(population_size=10, max_generations=15, bounds=box3, seed=4)
    result = run_de(sphere_batch, cfg, vectorized=True)
    path = result.to_csv(tmp_path / "traces" / "run.csv")

    frame = pd.read_csv(path)
    assert list(frame.columns) == ["generation", "best_cost", "mean_cost"]
    assert len(frame) == 16
    assert frame["best_cost"].iloc[-1] == pytest.approx(result.best_cost)


def test_run_result_rejects_increasing_trace():
    """Tests the monotone-trace validator."""
    with pytest.raises(ValidationError, match="non-increasing"):
        DERunResult(best_vector=np.zeros(1), best_cost=0.0, trace=[1.0, 2.0])
