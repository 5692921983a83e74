import argparse
import asyncio
import json
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd

from app.array.geometry import element_distances, parse_geometry_spec, steering_vector
from app.bench.config import BenchmarkConfig, ScenarioDocument, load_document
from app.bench.report import report
from app.bench.runner import run_benchmark
from app.channel.simulator import simulate_snapshots
from app.channel.snapshot_io import read_snapshots, write_snapshots
from app.config import config
from app.exceptions import NearFieldError
from app.linalg.subspace import noise_subspace, sample_covariance
from app.localizer.domain import SearchDomain, SearchGrid
from app.localizer.factory import LocalizerFactory, LocalizerType
from app.localizer.music import music_spectrum, spectrum_frame
from app.logger import define_log_level, logger
from app.schema import PhaseModel, SourceLocation


def _write_json(payload: dict, path: Optional[str]) -> None:
    text = json.dumps(payload, indent=2)
    if path is None:
        print(text)
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(text + "\n", encoding="utf-8")
    logger.info(f"Wrote {path}")


def cmd_steer(args) -> None:
    wavelength = args.wavelength or config.simulation.wavelength
    geometry = parse_geometry_spec(args.geometry, wavelength)
    location = SourceLocation.from_degrees(args.phi, args.r, args.psi)
    model = PhaseModel(args.model) if args.model else None
    vector = steering_vector(geometry, location, wavelength, model)
    columns = {
        "m": np.arange(1, geometry.num_elements + 1),
        "re": vector.real,
        "im": vector.imag,
    }
    if args.details:
        positions = geometry.element_positions
        columns.update(
            x_m=positions[:, 0],
            y_m=positions[:, 1],
            z_m=positions[:, 2],
            distance_m=element_distances(geometry, location, model),
            phase_rad=np.angle(vector),
        )
    frame = pd.DataFrame(columns)
    if args.out:
        frame.to_csv(args.out, index=False, float_format="%.17g")
        logger.info(f"Wrote steering vector of {geometry.describe()} to {args.out}")
    else:
        print(frame.to_csv(index=False, float_format="%.17g"), end="")


def cmd_simulate(args) -> None:
    document = load_document(args.config, ScenarioDocument)
    if args.seed is not None:
        document = document.model_copy(update={"seed": args.seed})
    scenario = document.scenario()
    snapshots = simulate_snapshots(scenario)
    write_snapshots(args.out, snapshots)
    logger.info(
        f"Simulated {scenario.num_sources} sources on {scenario.geometry.describe()}, "
        f"T={scenario.snapshots}, seed {scenario.seed} -> {args.out}"
    )


def _domain_for(snapshots) -> SearchDomain:
    return SearchDomain.default(snapshots.geometry, snapshots.wavelength)


def cmd_localize(args) -> None:
    snapshots = read_snapshots(args.input)
    localizer_type = LocalizerType(args.method)
    kwargs = {"domain": _domain_for(snapshots)}
    if localizer_type is LocalizerType.MUSIC:
        kwargs["grid_spec"] = args.grid
    else:
        kwargs["seed"] = args.seed
    localizer = LocalizerFactory.create_localizer(localizer_type, **kwargs)
    result = localizer.localize(snapshots, args.k)

    if args.trace_dir:
        for index, trace in enumerate(result.traces):
            trace.to_csv(Path(args.trace_dir) / f"{result.method}_run{index}.csv")
    payload = result.summary()
    if snapshots.truth is not None:
        payload["truth"] = [
            {"phi_deg": t.phi_deg, "psi_deg": t.psi_deg, "range_m": t.range}
            for t in snapshots.truth
        ]
    _write_json(payload, args.out)


def cmd_spectrum(args) -> None:
    snapshots = read_snapshots(args.input)
    domain = _domain_for(snapshots)
    grid = (
        SearchGrid.from_spec(domain, args.grid)
        if args.grid
        else SearchGrid.from_settings(domain)
    )
    basis = noise_subspace(sample_covariance(snapshots.data), args.k)
    spectrum = music_spectrum(basis, grid, snapshots.geometry, snapshots.wavelength)
    spectrum_frame(spectrum, grid).to_csv(args.out, index=False)
    logger.info(f"Wrote {grid.describe()} pseudospectrum to {args.out}")


def cmd_bench(args) -> None:
    bench = load_document(args.config, BenchmarkConfig)
    outcome = asyncio.run(
        run_benchmark(
            bench,
            output_dir=args.out,
            workers=args.workers,
            record_runtime=False if args.no_runtime else None,
        )
    )
    logger.info(f"Results: {outcome.results_path}, summary: {outcome.summary_path}")


def cmd_report(args) -> None:
    summary = report(args.input, args.out)
    logger.info(f"Summarized {len(summary['groups'])} (method, sweep) groups")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nearfield",
        description="Near-field multi-source localization with differential evolution",
    )
    parser.add_argument("--log-level", default=None, help="Console log level")
    sub = parser.add_subparsers(dest="command", required=True)

    steer = sub.add_parser("steer", help="Dump a near-field steering vector as CSV")
    steer.add_argument(
        "--geometry",
        required=True,
        help="ula:M[:spacing_m] or upa:MXxMY[:spacing_m]; lambda/2 spacing when omitted",
    )
    steer.add_argument("--phi", type=float, required=True, help="Azimuth in degrees")
    steer.add_argument("--r", type=float, required=True, help="Range in meters")
    steer.add_argument("--psi", type=float, default=None, help="Elevation in degrees (UPA)")
    steer.add_argument(
        "--lambda", dest="wavelength", type=float, default=None, help="Wavelength in meters"
    )
    steer.add_argument("--model", choices=[m.value for m in PhaseModel], default=None)
    steer.add_argument(
        "--details", action="store_true", help="Add element positions, distances and phases"
    )
    steer.add_argument("--out", default=None, help="CSV path; stdout when omitted")
    steer.set_defaults(handler=cmd_steer)

    simulate = sub.add_parser("simulate", help="Simulate snapshots into an NFSN file")
    simulate.add_argument("--config", required=True, help="Scenario document (json/toml)")
    simulate.add_argument("--seed", type=int, default=None)
    simulate.add_argument("--out", required=True)
    simulate.set_defaults(handler=cmd_simulate)

    localize = sub.add_parser("localize", help="Localize sources in an NFSN file")
    localize.add_argument("--in", dest="input", required=True)
    localize.add_argument("--method", choices=[t.value for t in LocalizerType], required=True)
    localize.add_argument("--k", type=int, required=True)
    localize.add_argument("--grid", default=None, help="MUSIC grid, e.g. 200x1000")
    localize.add_argument("--seed", type=int, default=0)
    localize.add_argument("--trace-dir", default=None, help="Write DE traces as CSV")
    localize.add_argument("--out", default=None)
    localize.set_defaults(handler=cmd_localize)

    spectrum = sub.add_parser("spectrum", help="Export the MUSIC pseudospectrum")
    spectrum.add_argument("--in", dest="input", required=True)
    spectrum.add_argument("--k", type=int, required=True)
    spectrum.add_argument("--grid", default=None)
    spectrum.add_argument("--out", required=True)
    spectrum.set_defaults(handler=cmd_spectrum)

    bench = sub.add_parser("bench", help="Run a Monte-Carlo benchmark")
    bench.add_argument("--config", required=True, help="Benchmark document (json/toml)")
    bench.add_argument("--out", default=None, help="Results directory")
    bench.add_argument("--workers", type=int, default=None)
    bench.add_argument("--no-runtime", action="store_true", help="Leave runtime_s empty")
    bench.set_defaults(handler=cmd_bench)

    summary = sub.add_parser("report", help="Recompute a benchmark summary")
    summary.add_argument("--in", dest="input", required=True)
    summary.add_argument("--out", required=True)
    summary.set_defaults(handler=cmd_report)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.log_level:
        define_log_level(print_level=args.log_level.upper(), name=args.command)

    try:
        args.handler(args)
    except NearFieldError as e:
        logger.error(e.message)
        return 1
    except KeyboardInterrupt:
        logger.warning("Operation interrupted.")
        return 130
    return 0


if __name__ == "__main__":
    sys.exit(main())
