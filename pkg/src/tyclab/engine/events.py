"""
Event bookkeeping for the integrators: negativity intervals and blow-up records.

  - locate_zero_crossing: Brent's method on the dense output of an accepted step
  - estimate_blowup_time: cutoff-crossing time of a diverging tail, refined by a
    c/(T* - t) fit
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

logger = logging.getLogger(__name__)

CROSSING_XTOL = 1e-10


def locate_zero_crossing(
    value_at: Callable[[float], float],
    bracket: Tuple[float, float],
    neg_eps: float = 0.0,
) -> float:
    """
    Time at which ``value_at(t)`` crosses the level ``-neg_eps`` inside ``bracket``.

    Args:
        value_at: the observed quantity as a function of time (typically the dense
                  output of one accepted step).
        bracket: (t_lo, t_hi) with the quantity on opposite sides of -neg_eps at the
                 two ends.
        neg_eps: negativity tolerance.

    Raises:
        ValueError: if the bracket does not enclose a crossing.
    """
    t_lo, t_hi = bracket
    if not t_lo < t_hi:
        raise ValueError("bracket must satisfy t_lo < t_hi")

    def shifted(t: float) -> float:
        return float(value_at(t)) + neg_eps

    g_lo, g_hi = shifted(t_lo), shifted(t_hi)
    if g_lo == 0.0:
        return t_lo
    if g_hi == 0.0:
        return t_hi
    if np.sign(g_lo) == np.sign(g_hi):
        raise ValueError(
            f"no crossing of {-neg_eps!r} in [{t_lo!r}, {t_hi!r}]: "
            f"values {g_lo - neg_eps!r} and {g_hi - neg_eps!r}"
        )
    return brentq(shifted, t_lo, t_hi, xtol=CROSSING_XTOL)


@dataclass(frozen=True)
class BlowupEstimate:
    t_estimate: float
    method: str
    t_cutoff: float
    t_fit: float


def estimate_blowup_time(
    times: Sequence[float],
    magnitudes: Sequence[float],
    cutoff: float,
    fit_points: int = 8,
) -> BlowupEstimate:
    """
    Estimate the blow-up time from the tail of a diverging magnitude history.

    The primary estimate is the time at which the magnitude first reaches ``cutoff``,
    interpolated linearly in 1/magnitude between the bracketing samples (exact for
    c/(T* - t) profiles). The secondary estimate fits 1/magnitude by a straight line
    over the last ``fit_points`` samples and reports its root T*.

    Raises:
        ValueError: if the tail is not strictly increasing or never reaches cutoff.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(magnitudes, dtype=float)
    if t.size < 2 or t.size != y.size:
        raise ValueError("need at least two (time, magnitude) samples of equal length")
    if np.any(np.diff(t) <= 0):
        raise ValueError("times must be strictly increasing")
    if np.any(np.diff(y) <= 0) or y[0] <= 0:
        raise ValueError("blow-up tail is not monotonically increasing")
    if y[-1] < cutoff:
        raise ValueError(f"tail never reaches the cutoff {cutoff!r}")

    first = int(np.argmax(y >= cutoff))
    if first == 0:
        t_cutoff = float(t[0])
    else:
        u0, u1 = 1.0 / y[first - 1], 1.0 / y[first]
        weight = (u0 - 1.0 / cutoff) / (u0 - u1)
        t_cutoff = float(t[first - 1] + weight * (t[first] - t[first - 1]))

    k = min(fit_points, t.size)
    slope, intercept = np.polyfit(t[-k:], 1.0 / y[-k:], 1)
    t_fit = float(-intercept / slope) if slope < 0 else float("nan")

    return BlowupEstimate(
        t_estimate=t_cutoff, method="cutoff_crossing", t_cutoff=t_cutoff, t_fit=t_fit
    )


@dataclass(frozen=True)
class BlowupRecord:
    component: str
    sign: str
    t_estimate: float
    method: str
    t_fit: float = float("nan")


@dataclass
class EventLog:
    """Negativity intervals per species and the first blow-up, if any."""

    negativity_intervals: Dict[str, List[Tuple[float, float]]] = field(
        default_factory=dict
    )
    blowup: Optional[BlowupRecord] = None

    def has_negativity(self) -> bool:
        return any(self.negativity_intervals.values())

    def intervals(self, component: str) -> List[Tuple[float, float]]:
        return self.negativity_intervals.get(component, [])
