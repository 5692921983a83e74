from app.optimizer.de import (
    ConvergenceConfig,
    DEConfig,
    DERunResult,
    binomial_crossover,
    init_population,
    mutate_rand1,
    reflect_into_bounds,
    run_de,
    select_greedy,
)


__all__ = [
    "ConvergenceConfig",
    "DEConfig",
    "DERunResult",
    "binomial_crossover",
    "init_population",
    "mutate_rand1",
    "reflect_into_bounds",
    "run_de",
    "select_greedy",
]
