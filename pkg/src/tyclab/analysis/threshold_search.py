"""
Threshold search and region maps.

Along a swept axis (initial supermales s0, or the scaled introduction rate gamma with
f0 = m0 fixed) outcomes are assumed to be ordered Positive -> NegativeNoBlowup ->
Blowup. Each search:
  1) classifies the bracket endpoints (BracketInvalidError if on the same side)
  2) pre-scans the bracket and checks the ordering (NonMonotoneScanError otherwise)
  3) bisects the sub-bracket where the requested boundary is crossed
  4) re-classifies at critical -/+ tol to verify the boundary
"""

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from tyclab.analysis.region_classifier import IndeterminateError, Region, classify
from tyclab.engine.integrator_config import IntegratorConfig
from tyclab.models.params import ModelFamily, ModelSpec, StateVector

logger = logging.getLogger(__name__)

WORKERS_ENV = "TYCLAB_WORKERS"
PRESCAN_POINTS = 16
DEFAULT_TOL = 1e-4
DEFAULT_UPPER = 10.0
KINK_RATIO = 3.0


class Axis(str, Enum):
    S0 = "s0"
    GAMMA = "gamma"


class Boundary(str, Enum):
    R12 = "R1/2"
    R23 = "R2/3"

    def is_above(self, region: Region) -> bool:
        if self is Boundary.R12:
            return region is not Region.POSITIVE
        return region is Region.BLOWUP


class BracketInvalidError(ValueError):
    """Both bracket endpoints fall on the same side of the boundary."""


class NonMonotoneScanError(RuntimeError):
    """The outcome sequence along the axis re-enters a region it already left."""


def axis_problem(
    model: ModelSpec, f0m0: float, axis: Axis, value: float, s0: float = 0.0
) -> Tuple[ModelSpec, StateVector]:
    """The (model, initial state) pair for one point on the swept axis."""
    if model.is_dimensional or model.family is ModelFamily.CLASSIC4:
        raise ValueError("threshold searches run on dimensionless three-species models")
    if Axis(axis) is Axis.S0:
        return model, StateVector(f0m0, f0m0, value)
    return model.with_gamma(value), StateVector(f0m0, f0m0, s0)


def classify_on_axis(
    model: ModelSpec,
    f0m0: float,
    axis: Axis,
    value: float,
    cfg: IntegratorConfig,
    s0: float = 0.0,
) -> Region:
    spec, x0 = axis_problem(model, f0m0, axis, value, s0)
    return classify(spec, x0, cfg).region


def scan_axis(
    model: ModelSpec,
    f0m0: float,
    axis: Axis,
    values: Sequence[float],
    cfg: IntegratorConfig = IntegratorConfig(),
    s0: float = 0.0,
) -> List[Region]:
    """Classify every value of the axis in turn."""
    return [classify_on_axis(model, f0m0, axis, v, cfg, s0) for v in values]


def is_weakly_ordered(regions: Sequence[Region]) -> bool:
    """True when no region reappears after being left."""
    ranks = [r.rank for r in regions]
    return all(a <= b for a, b in zip(ranks, ranks[1:]))


@dataclass
class ThresholdEstimate:
    value: float
    axis: Axis
    boundary: Boundary
    f0m0: float
    below: Region
    above: Region
    bracket: Tuple[float, float]

    @property
    def verified(self) -> bool:
        """True when the regions at value -/+ tol lie on the expected sides."""
        return not self.boundary.is_above(self.below) and self.boundary.is_above(
            self.above
        )

    @property
    def status(self) -> str:
        return "ok" if self.verified else "unverified"


def find_threshold(
    model: ModelSpec,
    f0m0: float,
    axis: Axis,
    boundary: Boundary,
    bracket: Tuple[float, float],
    tol: float = DEFAULT_TOL,
    cfg: IntegratorConfig = IntegratorConfig(),
    s0: float = 0.0,
    prescan_points: int = PRESCAN_POINTS,
) -> ThresholdEstimate:
    """
    Bisect the axis for the critical value of ``boundary``.

    Args:
        model: dimensionless three-species model.
        f0m0: common initial value of f and m.
        axis: Axis.S0 (vary s0) or Axis.GAMMA (vary gamma with s0 fixed).
        boundary: Boundary.R12 (negativity onset) or Boundary.R23 (blow-up onset).
        bracket: (lo, hi) with lo below and hi above the boundary.
        tol: final bracket width.
        cfg: solver settings used by every classification.
        s0: initial supermales on the gamma axis.

    Returns:
        ThresholdEstimate holding the midpoint of the final bracket and the regions
        found at value - tol and value + tol. When those regions do not sit
        on either side of the boundary the estimate is returned with
        ``verified`` False and a warning is logged.

    Raises:
        BracketInvalidError, NonMonotoneScanError, IndeterminateError.
    """
    axis, boundary = Axis(axis), Boundary(boundary)
    lo, hi = float(bracket[0]), float(bracket[1])
    if not lo < hi:
        raise ValueError("bracket must satisfy lo < hi")
    if tol <= 0:
        raise ValueError("tol must be > 0")

    def region_at(value: float) -> Region:
        return classify_on_axis(model, f0m0, axis, value, cfg, s0)

    r_lo, r_hi = region_at(lo), region_at(hi)
    if boundary.is_above(r_lo) or not boundary.is_above(r_hi):
        raise BracketInvalidError(
            f"bracket [{lo}, {hi}] does not straddle {boundary.value}: "
            f"{r_lo.value} at lo, {r_hi.value} at hi"
        )

    grid = np.linspace(lo, hi, prescan_points)
    regions = [r_lo] + [region_at(v) for v in grid[1:-1]] + [r_hi]
    if not is_weakly_ordered(regions):
        raise NonMonotoneScanError(
            f"outcomes along {axis.value} at f0=m0={f0m0} are not ordered: "
            + ", ".join(r.value for r in regions)
        )
    k = next(i for i, r in enumerate(regions) if boundary.is_above(r))
    lo, hi = grid[k - 1], grid[k]

    while hi - lo >= tol:
        mid = 0.5 * (lo + hi)
        if boundary.is_above(region_at(mid)):
            hi = mid
        else:
            lo = mid
    value = 0.5 * (lo + hi)

    below = region_at(max(value - tol, float(bracket[0])))
    above = region_at(min(value + tol, float(bracket[1])))
    logger.info(
        "%s threshold on %s at f0=m0=%g: %.6f (%s | %s)",
        boundary.value,
        axis.value,
        f0m0,
        value,
        below.value,
        above.value,
    )
    estimate = ThresholdEstimate(
        value=value,
        axis=axis,
        boundary=boundary,
        f0m0=f0m0,
        below=below,
        above=above,
        bracket=(float(bracket[0]), float(bracket[1])),
    )
    if not estimate.verified:
        logger.warning(
            "%s threshold at f0=m0=%g is unverified: %s at %.6f, %s at %.6f",
            boundary.value,
            f0m0,
            below.value,
            value - tol,
            above.value,
            value + tol,
        )
    return estimate


# --- region maps ---------------------------------------------------------------------


@dataclass(frozen=True)
class ThresholdPoint:
    f0m0: float
    critical: Optional[float]
    status: str = "ok"
    below: Optional[Region] = None
    above: Optional[Region] = None

    @classmethod
    def from_estimate(cls, estimate: ThresholdEstimate) -> "ThresholdPoint":
        return cls(
            estimate.f0m0,
            estimate.value,
            estimate.status,
            estimate.below,
            estimate.above,
        )


@dataclass
class ThresholdCurve:
    axis: Axis
    boundary: Boundary
    points: List[ThresholdPoint] = field(default_factory=list)
    absent: bool = False

    def resolved(self) -> Tuple[np.ndarray, np.ndarray]:
        """(f0m0, critical) arrays of the verified points."""
        ok = [p for p in self.points if p.status == "ok"]
        return (
            np.array([p.f0m0 for p in ok], dtype=float),
            np.array([p.critical for p in ok], dtype=float),
        )

    def to_frame(self) -> pd.DataFrame:
        if self.absent:
            absent = {
                "f0m0": np.nan,
                "critical": np.nan,
                "boundary": self.boundary.value,
                "status": "absent",
            }
            return pd.DataFrame([absent])
        return pd.DataFrame(
            [
                {
                    "f0m0": p.f0m0,
                    "critical": np.nan if p.critical is None else p.critical,
                    "boundary": self.boundary.value,
                    "status": p.status,
                }
                for p in self.points
            ],
            columns=["f0m0", "critical", "boundary", "status"],
        )


@dataclass
class RegionMap:
    lower: ThresholdCurve
    upper: ThresholdCurve

    def to_frame(self) -> pd.DataFrame:
        frames = [self.lower.to_frame(), self.upper.to_frame()]
        return pd.concat(frames, ignore_index=True)


_SEARCH_FAILURES = (BracketInvalidError, NonMonotoneScanError, IndeterminateError)


def _map_point(task) -> Tuple[ThresholdPoint, ThresholdPoint]:
    model, f0, axis, upper, tol, cfg, s0 = task
    star: Optional[ThresholdEstimate] = None
    try:
        star = find_threshold(model, f0, axis, Boundary.R12, (0.0, upper), tol, cfg, s0)
        lower = ThresholdPoint.from_estimate(star)
    except _SEARCH_FAILURES as exc:
        logger.warning("R1/2 search failed at f0=m0=%g: %s", f0, exc)
        lower = ThresholdPoint(f0, None, f"failed: {exc}")

    try:
        if classify_on_axis(model, f0, axis, upper, cfg, s0) is not Region.BLOWUP:
            return lower, ThresholdPoint(f0, None, "absent")
        start = star.value if star is not None else 0.0
        double_star = find_threshold(
            model, f0, axis, Boundary.R23, (start, upper), tol, cfg, s0
        )
        return lower, ThresholdPoint.from_estimate(double_star)
    except _SEARCH_FAILURES as exc:
        logger.warning("R2/3 search failed at f0=m0=%g: %s", f0, exc)
        return lower, ThresholdPoint(f0, None, f"failed: {exc}")


def worker_count(workers: Optional[int] = None) -> int:
    if workers is not None:
        return max(1, int(workers))
    return max(1, int(os.environ.get(WORKERS_ENV, "1")))


def region_map(
    model: ModelSpec,
    f0m0_range: Tuple[float, float] = (0.1, 0.5),
    axis: Axis = Axis.S0,
    resolution: int = 9,
    cfg: IntegratorConfig = IntegratorConfig(),
    upper: float = DEFAULT_UPPER,
    tol: float = DEFAULT_TOL,
    s0: float = 0.0,
    workers: Optional[int] = None,
) -> RegionMap:
    """
    Sweep f0 = m0 over ``f0m0_range`` and find both thresholds at each point.

    The Region2/3 curve is returned empty with ``absent=True`` when no sampled point
    blows up at the upper end of the axis. Per-point failures are recorded in the
    point status and the sweep continues.
    """
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    axis = Axis(axis)
    f0_values = np.linspace(f0m0_range[0], f0m0_range[1], resolution)
    tasks = [(model, float(f0), axis, upper, tol, cfg, s0) for f0 in f0_values]

    n_workers = worker_count(workers)
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(_map_point, tasks))
    else:
        results = [_map_point(task) for task in tasks]

    lower = ThresholdCurve(axis, Boundary.R12, [r[0] for r in results])
    upper_points = [r[1] for r in results]
    if all(p.status == "absent" for p in upper_points):
        upper_curve = ThresholdCurve(axis, Boundary.R23, [], absent=True)
    else:
        upper_curve = ThresholdCurve(axis, Boundary.R23, upper_points)
    logger.info(
        "region map over f0=m0 in %s on %s: %d/%d R1/2 points resolved, R2/3 %s",
        tuple(f0m0_range),
        axis.value,
        len(lower.resolved()[0]),
        resolution,
        "absent" if upper_curve.absent else f"{len(upper_curve.resolved()[0])} points",
    )
    return RegionMap(lower, upper_curve)


# --- model comparison ----------------------------------------------------------------


@dataclass(frozen=True)
class CurveShape:
    monotone_decreasing: bool
    non_smooth: bool


def curve_shape(f0m0: np.ndarray, critical: np.ndarray) -> CurveShape:
    """
    Describe a threshold curve.

    A curve is flagged non-smooth when the slope changes between neighbouring
    segments by more than KINK_RATIO times the median absolute slope.
    """
    f0m0 = np.asarray(f0m0, dtype=float)
    critical = np.asarray(critical, dtype=float)
    if critical.size < 2:
        return CurveShape(monotone_decreasing=True, non_smooth=False)
    steps = np.diff(critical)
    slopes = steps / np.diff(f0m0)
    non_smooth = False
    if slopes.size >= 2:
        typical = float(np.median(np.abs(slopes))) + 1e-12
        non_smooth = bool(np.any(np.abs(np.diff(slopes)) > KINK_RATIO * typical))
    return CurveShape(
        monotone_decreasing=bool(np.all(steps < 0)), non_smooth=non_smooth
    )


@dataclass
class ThresholdComparison:
    table: pd.DataFrame
    shapes: Dict[str, CurveShape]
    maps: Dict[str, RegionMap]


def compare_thresholds(
    models: Mapping[str, ModelSpec],
    axis: Axis = Axis.S0,
    f0m0_range: Tuple[float, float] = (0.1, 0.5),
    resolution: int = 9,
    cfg: IntegratorConfig = IntegratorConfig(),
    upper: float = DEFAULT_UPPER,
    tol: float = DEFAULT_TOL,
    s0: float = 0.0,
    workers: Optional[int] = None,
) -> ThresholdComparison:
    """
    Region maps of several models on a shared f0 = m0 grid, aligned for overlay.

    The table has one row per f0m0 value and, per model label, the columns
    ``<label>:R1/2`` and ``<label>:R2/3`` (NaN where absent or failed).
    """
    if not models:
        raise ValueError("at least one model is required")
    f0_values = np.linspace(f0m0_range[0], f0m0_range[1], resolution)
    table = pd.DataFrame({"f0m0": f0_values})
    shapes: Dict[str, CurveShape] = {}
    maps: Dict[str, RegionMap] = {}

    for label, model in models.items():
        rmap = region_map(
            model, f0m0_range, axis, resolution, cfg, upper, tol, s0, workers
        )
        maps[label] = rmap
        for curve in (rmap.lower, rmap.upper):
            column = np.full(resolution, np.nan)
            for i, point in enumerate(curve.points):
                if point.critical is not None:
                    column[i] = point.critical
            table[f"{label}:{curve.boundary.value}"] = column
        shapes[label] = curve_shape(*rmap.lower.resolved())
        logger.info(
            "%s R1/2 curve: monotone decreasing=%s, non-smooth=%s",
            label,
            shapes[label].monotone_decreasing,
            shapes[label].non_smooth,
        )
    return ThresholdComparison(table=table, shapes=shapes, maps=maps)
