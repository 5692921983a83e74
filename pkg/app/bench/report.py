"""Summary statistics over a benchmark results table."""

import json
import math
from pathlib import Path
from typing import Any, Dict, Optional, Union

import pandas as pd

from app.exceptions import BenchmarkIOError
from app.logger import logger


def _clean(value: Any) -> Any:
    if isinstance(value, float) and math.isnan(value):
        return None
    return value


def summarize(
    frame: pd.DataFrame, name: Optional[str] = None, sweep_axis: Optional[str] = None
) -> Dict[str, Any]:
    """Median and mean RMSE / runtime per (method, sweep value).

    RMSE is per trial (all matched source errors of the trial pooled); trials whose
    method failed or matched nothing are left out of the RMSE statistics and counted
    separately.
    """
    trials = frame.drop_duplicates(subset=["sweep", "trial", "method"])
    groups = []
    for (method, sweep), group in trials.groupby(["method", "sweep"], sort=False):
        rows = frame[(frame["method"] == method) & (frame["sweep"] == sweep)]
        flags = group["flags"].fillna("").astype(str)
        rmse = pd.to_numeric(group["rmse_m"], errors="coerce").dropna()
        runtime = pd.to_numeric(group["runtime_s"], errors="coerce").dropna()
        groups.append(
            {
                "method": method,
                "sweep": str(sweep),
                "trials": int(len(group)),
                "rmse_median": _clean(float(rmse.median())) if len(rmse) else None,
                "rmse_mean": _clean(float(rmse.mean())) if len(rmse) else None,
                "runtime_median": _clean(float(runtime.median())) if len(runtime) else None,
                "runtime_mean": _clean(float(runtime.mean())) if len(runtime) else None,
                "miss_rate": float(pd.to_numeric(rows["r_est_m"], errors="coerce").isna().mean()),
                "failed": int(flags.str.contains("failed").sum()),
            }
        )
    return {"name": name, "sweep_axis": sweep_axis, "groups": groups}


def write_summary(summary: Dict[str, Any], path: Union[str, Path]) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    except OSError as e:
        raise BenchmarkIOError(f"Failed to write summary {path}: {e}") from None
    return path


def load_results(path: Union[str, Path]) -> pd.DataFrame:
    """Read results.csv (or the directory holding it) keeping sweep labels as text."""
    path = Path(path)
    if path.is_dir():
        path = path / "results.csv"
    try:
        return pd.read_csv(path, dtype={"sweep": str, "method": str, "flags": str})
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise BenchmarkIOError(f"Failed to read results {path}: {e}") from None


def report(results: Union[str, Path], output: Union[str, Path]) -> Dict[str, Any]:
    """Recompute the summary of an existing results directory."""
    frame = load_results(results)
    summary = summarize(frame)
    write_summary(summary, output)
    logger.info(f"Summarized {len(frame)} rows from {results} into {output}")
    return summary
