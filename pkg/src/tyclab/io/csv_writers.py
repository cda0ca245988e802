"""
Deterministic file output for experiment results.

Every float is written with 17 significant digits so values read back are
bit-identical to the ones computed. Files produced here:
  - trajectory CSV: t, f, m, s[, r4]
  - snapshot CSV:   t, x, f, m, s (Dirichlet boundary nodes included as zeros)
  - norms CSV:      t, min_m, max_<species>, l1_<species>
  - threshold CSV:  f0m0, critical, boundary, status
  - event summary:  key=value lines
"""

import logging
import math
from pathlib import Path
from typing import Iterable, List, Optional

import numpy as np
import pandas as pd

from tyclab.engine.events import EventLog
from tyclab.engine.ode_integrator import Trajectory
from tyclab.engine.pde_integrator import FieldTrajectory
from tyclab.engine.rkf45 import SolverStatus

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def format_float(value: float) -> str:
    """17 significant digits; non-finite values as nan, inf and -inf."""
    value = float(value)
    if math.isnan(value):
        return "nan"
    return "{:.17g}".format(value)


def write_frame(df: pd.DataFrame, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.debug("wrote %d rows to %s", len(df), path)
    return path


def trajectory_frame(trajectory: Trajectory) -> pd.DataFrame:
    data = {"t": trajectory.times}
    for name in trajectory.species:
        data[name] = trajectory.component(name)
    return pd.DataFrame(data)


def write_trajectory(trajectory: Trajectory, path: Path) -> Path:
    return write_frame(trajectory_frame(trajectory), path)


def snapshot_frame(trajectory: FieldTrajectory, t: float) -> pd.DataFrame:
    """Field values at the recorded time nearest to ``t``, on every mesh node."""
    index = trajectory.nearest_index(t)
    values = trajectory.full_snapshots()[index]
    x = trajectory.grid.all_nodes
    data = {"t": np.full(x.size, trajectory.times[index]), "x": x}
    for i, name in enumerate(trajectory.species):
        data[name] = values[i]
    return pd.DataFrame(data)


def write_snapshots(
    trajectory: FieldTrajectory, times: Iterable[float], directory: Path
) -> List[Path]:
    """One CSV per requested time, named snapshot_000.csv, snapshot_001.csv, ..."""
    directory = Path(directory)
    return [
        write_frame(snapshot_frame(trajectory, t), directory / f"snapshot_{i:03d}.csv")
        for i, t in enumerate(times)
    ]


def write_norms(trajectory: FieldTrajectory, path: Path) -> Path:
    return write_frame(trajectory.diagnostics_frame(), path)


def summary_lines(
    region: Optional[str], status: SolverStatus, events: EventLog
) -> List[str]:
    """
    The event summary as key=value lines.

    Negativity intervals are written per species as "start:end" pairs separated by
    ";" (empty when the species stayed above -neg_eps). Blow-up keys are present
    only when a blow-up was recorded.
    """
    lines = [
        f"region={region if region is not None else 'Indeterminate'}",
        f"status={status.value}",
    ]
    for name, intervals in events.negativity_intervals.items():
        pairs = ";".join(f"{format_float(a)}:{format_float(b)}" for a, b in intervals)
        lines.append(f"negativity_{name}={pairs}")
    blowup = events.blowup
    if blowup is not None:
        lines += [
            f"blowup_component={blowup.component}",
            f"blowup_sign={blowup.sign}",
            f"blowup_t={format_float(blowup.t_estimate)}",
            f"blowup_method={blowup.method}",
            f"blowup_t_fit={format_float(blowup.t_fit)}",
        ]
    return lines


def write_summary(lines: List[str], path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def parse_summary(text: str) -> dict:
    """Read a key=value summary back into a dict of strings."""
    result = {}
    for line in text.splitlines():
        key, sep, value = line.partition("=")
        if sep:
            result[key.strip()] = value.strip()
    return result
