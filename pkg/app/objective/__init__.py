from app.objective.costs import (
    PenaltyConfig,
    esf_cost,
    esf_cost_batch,
    penalized_rls_cost,
    penalty,
    penalty_batch,
    rls_cost,
    rls_cost_batch,
)


__all__ = [
    "PenaltyConfig",
    "esf_cost",
    "esf_cost_batch",
    "penalized_rls_cost",
    "penalty",
    "penalty_batch",
    "rls_cost",
    "rls_cost_batch",
]
