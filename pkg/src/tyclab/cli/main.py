"""
Entry point for the tyclab command-line interface.

Every subcommand reads one experiment file (see tyclab.config.experiment_config),
applies any ``--set section.key=value`` overrides in order and writes its results
under the output directory:

  simulate   ODE run        -> trajectory.csv, summary.txt
  pde        PDE run        -> snapshot_NNN.csv, norms.csv, summary.txt
  classify   region only    -> summary.txt
  threshold  one threshold  -> threshold.csv
  regionmap  both curves    -> region_map.csv
  stability  criterion report for the four-species trojan state (stdout)
  compare    region maps of several models -> comparison.csv

Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure.

Usage:
    tyclab simulate experiment.json --set initial.s=2.5 --output-dir out -v
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np
import pandas as pd

from tyclab.analysis.region_classifier import (
    IndeterminateError,
    classify,
    outcome_from_events,
)
from tyclab.analysis.threshold_search import (
    Axis,
    Boundary,
    NonMonotoneScanError,
    compare_thresholds,
    find_threshold,
    region_map,
)
from tyclab.config.experiment_config import (
    ConfigError,
    ExperimentConfig,
    load_experiment_config,
)
from tyclab.engine.events import EventLog
from tyclab.engine.ode_integrator import integrate
from tyclab.engine.pde_integrator import integrate_pde
from tyclab.engine.rkf45 import SolverStatus
from tyclab.io.csv_writers import (
    format_float,
    summary_lines,
    write_frame,
    write_norms,
    write_snapshots,
    write_summary,
    write_trajectory,
)
from tyclab.models.criteria import stability_check

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2


def build_parser() -> argparse.ArgumentParser:
    """Create and return the command-line argument parser."""
    parser = argparse.ArgumentParser(
        prog="tyclab",
        description="Positivity, negativity and blow-up experiments for TYC models.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="Path to the experiment .json file")
    common.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="Override a config key (repeatable, last wins)",
    )
    common.add_argument(
        "--output-dir",
        help="Output directory (default: output.directory from the config)",
    )
    common.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="-v for INFO, -vv for DEBUG logging on stderr",
    )

    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("simulate", "Integrate the ODE model and write the trajectory"),
        ("pde", "Integrate the reaction-diffusion model and write snapshots"),
        ("classify", "Report the region of one initial condition"),
        ("threshold", "Bisect for one critical value"),
        ("regionmap", "Compute the R1/2 and R2/3 threshold curves"),
        ("stability", "Evaluate the stability criterion of the trojan state"),
        ("compare", "Overlay threshold curves of several models"),
    ):
        sub.add_parser(name, parents=[common], help=help_text)
    return parser


def configure_logging(verbosity: int) -> None:
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)


def _report(status: SolverStatus, events: EventLog, out: Path) -> None:
    """Write and print the event summary; StepCollapse becomes a numerical failure."""
    try:
        region: Optional[str] = outcome_from_events(status, events).region.value
    except IndeterminateError:
        region = None
    lines = summary_lines(region, status, events)
    write_summary(lines, out / "summary.txt")
    for line in lines:
        print(line)
    if region is None:
        raise IndeterminateError("step size collapsed without solution growth")


def cmd_simulate(config: ExperimentConfig, out: Path) -> int:
    model = config.model.build()
    x0 = config.initial.state(model.species)
    trajectory, events = integrate(model, x0, config.integrator)
    write_trajectory(trajectory, out / "trajectory.csv")
    _report(trajectory.status, events, out)
    return EXIT_OK


def cmd_pde(config: ExperimentConfig, out: Path) -> int:
    model = config.model.build()
    grid = config.grid.build()
    fields0 = config.initial.spatial_field(grid, model.species)
    trajectory, events = integrate_pde(model, fields0, grid, config.integrator)
    times = config.output.snapshot_times or (0.0, float(trajectory.times[-1]))
    write_snapshots(trajectory, times, out)
    write_norms(trajectory, out / "norms.csv")
    _report(trajectory.status, events, out)
    return EXIT_OK


def cmd_classify(config: ExperimentConfig, out: Path) -> int:
    model = config.model.build()
    if config.model.spatial:
        grid = config.grid.build()
        initial = config.initial.spatial_field(grid, model.species)
        outcome = classify(model, initial, config.integrator, grid)
    else:
        x0 = config.initial.state(model.species)
        outcome = classify(model, x0, config.integrator)
    _report(outcome.status, outcome.events, out)
    return EXIT_OK


def cmd_threshold(config: ExperimentConfig, out: Path) -> int:
    a = config.analysis
    estimate = find_threshold(
        config.model.build(),
        a.f0m0,
        Axis(a.axis),
        Boundary(a.boundary),
        a.bracket,
        a.tol,
        config.integrator,
        a.s0,
    )
    frame = pd.DataFrame(
        {
            "f0m0": [estimate.f0m0],
            "critical": [estimate.value],
            "boundary": [estimate.boundary.value],
            "status": [estimate.status],
        }
    )
    write_frame(frame, out / "threshold.csv")
    print(f"boundary={estimate.boundary.value}")
    print(f"axis={estimate.axis.value}")
    print(f"f0m0={format_float(estimate.f0m0)}")
    print(f"critical={format_float(estimate.value)}")
    print(f"below={estimate.below.value}")
    print(f"above={estimate.above.value}")
    print(f"verified={str(estimate.verified).lower()}")
    return EXIT_OK


def cmd_regionmap(config: ExperimentConfig, out: Path) -> int:
    a = config.analysis
    rmap = region_map(
        config.model.build(),
        a.f0m0_range,
        Axis(a.axis),
        a.resolution,
        config.integrator,
        a.upper,
        a.tol,
        a.s0,
    )
    frame = rmap.to_frame()
    path = write_frame(frame, out / "region_map.csv")
    resolved = int((frame["status"] == "ok").sum())
    print(f"Region map written to {path} ({resolved} resolved points)")
    if resolved == 0:
        logger.error("no threshold could be resolved at any f0=m0 point")
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_stability(config: ExperimentConfig, out: Path) -> int:
    model = config.model.build()
    if not model.is_dimensional:
        raise ConfigError("stability needs dimensional parameters beta, delta, K, mu")
    report = stability_check(model.params)
    eigenvalues = ";".join(
        f"{format_float(ev.real)}{'+' if ev.imag >= 0 else '-'}"
        f"{format_float(abs(ev.imag))}j"
        for ev in np.sort_complex(report.eigenvalues)
    )

    def flag(value: Optional[bool]) -> str:
        return "n/a" if value is None else str(value).lower()

    print(f"criterion={format_float(report.criterion_value)}")
    print(f"applicable={flag(report.applicable)}")
    print(f"trojan_state_stable={flag(report.trojan_state_stable)}")
    print(f"extinction_stable={flag(report.extinction_stable)}")
    print(f"jacobian_stable={flag(report.jacobian_stable)}")
    print(f"eigenvalues={eigenvalues}")
    print(f"agrees={flag(report.agrees)}")
    return EXIT_OK


def cmd_compare(config: ExperimentConfig, out: Path) -> int:
    a = config.analysis
    sections = a.compare or [config.model]
    models = {}
    for i, section in enumerate(sections):
        label = section.label or section.kind
        if label in models:
            label = f"{label}_{i}"
        models[label] = section.build()
    comparison = compare_thresholds(
        models,
        Axis(a.axis),
        a.f0m0_range,
        a.resolution,
        config.integrator,
        a.upper,
        a.tol,
        a.s0,
    )
    path = write_frame(comparison.table, out / "comparison.csv")
    for label, shape in comparison.shapes.items():
        print(
            f"{label}: monotone_decreasing={str(shape.monotone_decreasing).lower()} "
            f"non_smooth={str(shape.non_smooth).lower()}"
        )
    print(f"Comparison written to {path}")
    return EXIT_OK


COMMANDS: Dict[str, Callable[[ExperimentConfig, Path], int]] = {
    "simulate": cmd_simulate,
    "pde": cmd_pde,
    "classify": cmd_classify,
    "threshold": cmd_threshold,
    "regionmap": cmd_regionmap,
    "stability": cmd_stability,
    "compare": cmd_compare,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI workflow."""
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)

    try:
        config = load_experiment_config(args.config, args.overrides)
        out = Path(args.output_dir or config.output.directory)
        return COMMANDS[args.command](config, out)
    except (IndeterminateError, NonMonotoneScanError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
