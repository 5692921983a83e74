"""Monte-Carlo benchmark driver.

Every (sweep point, trial) pair draws its scenario from a child seed derived from the
master seed, so all methods see the same realization and results do not depend on the
order in which trials finish.
"""

import asyncio
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Optional, Union

import pandas as pd
from pydantic import BaseModel, Field

from app.bench.config import BenchmarkConfig, parse_method
from app.bench.metrics import match_locations, to_cartesian
from app.bench.report import summarize, write_summary
from app.channel.simulator import simulate_snapshots
from app.config import config as app_config
from app.exceptions import BenchmarkIOError
from app.localizer.base import LocalizationResult
from app.localizer.factory import LocalizerFactory, LocalizerType
from app.logger import logger
from app.optimizer.de import DEConfig
from app.rng import derive_seed
from app.schema import SourceLocation


CSV_COLUMNS = [
    "sweep",
    "trial",
    "method",
    "k",
    "src",
    "phi_true_deg",
    "psi_true_deg",
    "r_true_m",
    "phi_est_deg",
    "psi_est_deg",
    "r_est_m",
    "err_m",
    "rmse_m",
    "runtime_s",
    "flags",
]
RESULTS_FILE = "results.csv"
SUMMARY_FILE = "summary.json"


class TrialRecord(BaseModel):
    """One CSV row: a true source of one trial and the estimate matched to it."""

    sweep: str
    trial: int = Field(..., ge=0)
    method: str
    k: int = Field(..., ge=0)
    src: int = Field(..., ge=0)
    phi_true_deg: Optional[float] = None
    psi_true_deg: Optional[float] = None
    r_true_m: Optional[float] = None
    phi_est_deg: Optional[float] = None
    psi_est_deg: Optional[float] = None
    r_est_m: Optional[float] = None
    err_m: Optional[float] = Field(None, ge=0)
    rmse_m: Optional[float] = Field(None, ge=0)
    runtime_s: Optional[float] = Field(None, ge=0)
    flags: str = ""
    true_position: List[float] = Field(default_factory=list, description="Cartesian (m)")
    est_position: Optional[List[float]] = Field(None, description="Cartesian (m)")

    def row(self) -> dict:
        return self.model_dump(include=set(CSV_COLUMNS))


class BenchmarkOutcome(BaseModel):
    results_path: Path
    summary_path: Path
    records: List[TrialRecord]
    summary: dict


def _localizer_kwargs(
    bench: BenchmarkConfig,
    localizer_type: LocalizerType,
    k: int,
    grid: Optional[str],
    seed: int,
) -> dict:
    domain = bench.scenario.domain()
    de_settings = bench.de or app_config.de
    if localizer_type is LocalizerType.MUSIC:
        return {"domain": domain, "grid_spec": grid, "settings": bench.music}
    if localizer_type is LocalizerType.NEMO:
        de_config = DEConfig.from_settings(domain.bounds(), seed=seed, settings=de_settings)
        return {"domain": domain, "de_config": de_config, "settings": bench.nemo}
    de_config = DEConfig.for_joint_search(
        domain.joint_bounds(k),
        k,
        seed=seed,
        settings=bench.neef,
        F=de_settings.F,
        Cr=de_settings.Cr,
        workers=de_settings.workers,
    )
    return {"domain": domain, "de_config": de_config}


def _records_for(
    sweep: str,
    trial: int,
    method: str,
    truth: List[SourceLocation],
    result: Optional[LocalizationResult],
    geometry,
    runtime: Optional[float],
    flags: List[str],
    miss_distance: Optional[float] = None,
) -> List[TrialRecord]:
    estimates = result.estimates if result is not None else []
    match = match_locations(truth, estimates, geometry, miss_distance)
    matched = {t: j for j, t in enumerate(match.assignment) if t >= 0}
    if match.misses:
        flags = flags + ["miss"]

    records = []
    for src, loc in enumerate(truth):
        estimate = estimates[matched[src]] if src in matched else None
        records.append(
            TrialRecord(
                sweep=sweep,
                trial=trial,
                method=method,
                k=len(truth),
                src=src,
                phi_true_deg=loc.phi_deg,
                psi_true_deg=loc.psi_deg,
                r_true_m=loc.range,
                phi_est_deg=None if estimate is None else estimate.phi_deg,
                psi_est_deg=None if estimate is None else estimate.psi_deg,
                r_est_m=None if estimate is None else estimate.range,
                err_m=None if estimate is None else match.errors[matched[src]],
                rmse_m=match.rmse,
                runtime_s=runtime,
                flags="|".join(flags),
                true_position=to_cartesian(loc, geometry).tolist(),
                est_position=None
                if estimate is None
                else to_cartesian(estimate, geometry).tolist(),
            )
        )
    return records


def _failed_trial_records(
    bench: BenchmarkConfig, sweep: str, trial: int, value: Union[float, str]
) -> List[TrialRecord]:
    """One placeholder row per method for a trial whose scenario never materialized."""
    k = bench.expected_k(value)
    return [
        TrialRecord(
            sweep=sweep,
            trial=trial,
            method=tag,
            k=k,
            src=0,
            rmse_m=bench.miss_distance,
            flags="failed",
        )
        for tag in bench.methods
    ]


def run_trial(
    bench: BenchmarkConfig,
    point: int,
    value: Union[float, str],
    trial: int,
    record_runtime: bool = True,
) -> List[TrialRecord]:
    """Simulate one realization and run every configured method on it.

    Failures never escape: a scenario that cannot be built or simulated yields one
    ``failed`` row per method, and a failing method yields ``failed`` rows for its
    sources while the other methods still run.
    """
    sweep = bench.label(value)
    child_seed = derive_seed(bench.seed, point, trial)
    try:
        scenario = bench.scenario_for(value, child_seed)
        snapshots = simulate_snapshots(scenario)
    except Exception as e:
        logger.warning(f"Trial {trial} at {sweep} could not be simulated: {e}")
        return _failed_trial_records(bench, sweep, trial, value)
    truth = scenario.locations
    method_seed = derive_seed(child_seed, 2)

    records: List[TrialRecord] = []
    for tag in bench.methods:
        localizer_type, method_grid = parse_method(tag)
        grid = bench.music_grid_for(value, method_grid)
        started = time.perf_counter()
        try:
            localizer = LocalizerFactory.create_localizer(
                localizer_type,
                **_localizer_kwargs(
                    bench, localizer_type, len(truth), grid, method_seed
                ),
            )
            result = localizer.localize(snapshots, len(truth))
            runtime = time.perf_counter() - started if record_runtime else None
            rows = _records_for(
                sweep,
                trial,
                tag,
                truth,
                result,
                scenario.geometry,
                runtime,
                list(result.flags),
                bench.miss_distance,
            )
        except Exception as e:
            logger.warning(f"Trial {trial} at {sweep} failed for {tag}: {e}")
            runtime = time.perf_counter() - started if record_runtime else None
            rows = _records_for(
                sweep,
                trial,
                tag,
                truth,
                None,
                scenario.geometry,
                runtime,
                ["failed"],
                bench.miss_distance,
            )
        records.extend(rows)
    return records


def write_results(records: List[TrialRecord], path: Path) -> Path:
    frame = pd.DataFrame([r.row() for r in records], columns=CSV_COLUMNS)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, float_format="%.12g")
    except OSError as e:
        raise BenchmarkIOError(f"Failed to write results {path}: {e}") from None
    return path


async def run_benchmark(
    bench: BenchmarkConfig,
    output_dir: Optional[Union[str, Path]] = None,
    workers: Optional[int] = None,
    record_runtime: Optional[bool] = None,
) -> BenchmarkOutcome:
    """Run every (sweep point, trial) and write results.csv plus summary.json.

    Trials run on a pool of ``workers`` threads; rows are written in (point, trial)
    order regardless of completion order.
    """
    settings = app_config.benchmark
    workers = workers or settings.workers
    record_runtime = settings.record_runtime if record_runtime is None else record_runtime
    output_dir = Path(
        output_dir or bench.output or app_config.workspace_root / "bench" / bench.name
    )
    logger.info(
        f"Running benchmark '{bench.name}': {bench.scenario.describe()}, "
        f"{bench.sweep.value} in {bench.values}, {bench.trials} trials, "
        f"methods {bench.methods}"
    )

    loop = asyncio.get_running_loop()
    semaphore = asyncio.Semaphore(workers)
    executor = ThreadPoolExecutor(max_workers=workers)

    async def run_one(point: int, value, trial: int) -> List[TrialRecord]:
        async with semaphore:
            return await loop.run_in_executor(
                executor, run_trial, bench, point, value, trial, record_runtime
            )

    records: List[TrialRecord] = []
    try:
        for point, value in enumerate(bench.values):
            batches = await asyncio.gather(
                *(run_one(point, value, trial) for trial in range(bench.trials))
            )
            for batch in batches:
                records.extend(batch)
            logger.info(
                f"Finished {bench.sweep.value}={bench.label(value)} "
                f"({point + 1}/{len(bench.values)})"
            )
    finally:
        executor.shutdown(wait=True)

    results_path = write_results(records, output_dir / RESULTS_FILE)
    frame = pd.DataFrame([r.row() for r in records], columns=CSV_COLUMNS)
    summary = summarize(frame, name=bench.name, sweep_axis=bench.sweep.value)
    summary_path = write_summary(summary, output_dir / SUMMARY_FILE)
    logger.info(f"Wrote {len(records)} rows to {results_path}")
    return BenchmarkOutcome(
        results_path=results_path,
        summary_path=summary_path,
        records=records,
        summary=summary,
    )
