from app.bench.config import (
    BenchmarkConfig,
    ScenarioDocument,
    ScenarioTemplate,
    SweepAxis,
    load_document,
)
from app.bench.metrics import MatchResult, match_and_rmse, match_locations, to_cartesian
from app.bench.report import report, summarize
from app.bench.runner import TrialRecord, run_benchmark, run_trial


__all__ = [
    "BenchmarkConfig",
    "MatchResult",
    "ScenarioDocument",
    "ScenarioTemplate",
    "SweepAxis",
    "TrialRecord",
    "load_document",
    "match_and_rmse",
    "match_locations",
    "report",
    "run_benchmark",
    "run_trial",
    "summarize",
    "to_cartesian",
]
