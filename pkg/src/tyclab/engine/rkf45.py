"""
Adaptive Runge-Kutta-Fehlberg 4(5) integration of stacked species systems.

The state is an array of shape (n_species, n_points): n_points = 1 for the ODE
engine, the grid size for the method-of-lines PDE engine. Events are observed per
species through two reductions over the points axis:
  - min over points, for negativity (crossing of -neg_eps)
  - max of |value| over points, for blow-up (reaching blowup_cutoff)

Each accepted step gets a cubic Hermite dense output, which feeds both the fixed
``sample_dt`` trajectory records and the localisation of negativity crossings.
"""

import logging
import math
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Deque, List, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from tyclab.engine.events import (
    BlowupRecord,
    EventLog,
    estimate_blowup_time,
    locate_zero_crossing,
)
from tyclab.engine.integrator_config import IntegratorConfig

logger = logging.getLogger(__name__)


class SolverStatus(str, Enum):
    COMPLETED_HORIZON = "CompletedHorizon"
    BLOWUP_DETECTED = "BlowupDetected"
    STEP_COLLAPSE = "StepCollapse"


# Fehlberg tableau; the 5th-order solution is propagated.
_C = np.array([0.0, 1 / 4, 3 / 8, 12 / 13, 1.0, 1 / 2])
_A = (
    np.array([]),
    np.array([1 / 4]),
    np.array([3 / 32, 9 / 32]),
    np.array([1932 / 2197, -7200 / 2197, 7296 / 2197]),
    np.array([439 / 216, -8.0, 3680 / 513, -845 / 4104]),
    np.array([-8 / 27, 2.0, -3544 / 2565, 1859 / 4104, -11 / 40]),
)
_B5 = np.array([16 / 135, 0.0, 6656 / 12825, 28561 / 56430, -9 / 50, 2 / 55])
_ERR = np.array([1 / 360, 0.0, -128 / 4275, -2197 / 75240, 1 / 50, 2 / 55])

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0
HISTORY_LENGTH = 64
# Stiff divergence: accepted steps below STALL_STEP_RATIO times the largest accepted
# step while the peak magnitude grows by less than STALL_GROWTH over the history.
STALL_STEP_RATIO = 1e-3
STALL_GROWTH = 1.5

Rhs = Callable[[float, np.ndarray], np.ndarray]


def rkf45_step(
    rhs: Rhs, t: float, y: np.ndarray, h: float, k1: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """One Fehlberg step from (t, y) with slope k1; returns (y_new, error estimate)."""
    k = np.empty((6, y.size))
    k[0] = k1
    for i in range(1, 6):
        k[i] = rhs(t + _C[i] * h, y + h * (_A[i] @ k[:i]))
    return y + h * (_B5 @ k), h * (_ERR @ k)


@dataclass
class RawSolution:
    times: np.ndarray
    states: np.ndarray
    status: SolverStatus
    events: EventLog
    accepted_steps: int
    rejected_steps: int


class _Recorder:
    """Collects (t, state) records and returns them sorted with duplicates merged."""

    def __init__(self) -> None:
        self._times: List[float] = []
        self._states: List[np.ndarray] = []

    def add(self, t: float, state: np.ndarray) -> None:
        self._times.append(float(t))
        self._states.append(np.array(state, dtype=float))

    def add_many(self, times: np.ndarray, states: np.ndarray) -> None:
        for t, state in zip(times, states):
            self.add(t, state)

    def finish(self) -> Tuple[np.ndarray, np.ndarray]:
        times = np.asarray(self._times)
        states = np.asarray(self._states)
        order = np.argsort(times, kind="stable")
        times, states = times[order], states[order]
        # Later records win ties (step-end values over dense-output values).
        keep = np.append(np.diff(times) > 0, True)
        return times[keep], states[keep]


def _monotone_tail(times: Sequence[float], values: Sequence[float]):
    end = len(values) - 1
    start = end
    while start > 0 and values[start - 1] < values[start]:
        start -= 1
    return list(times)[start:], list(values)[start:]


def _stalled(
    hist_mag: Deque[np.ndarray], step: float, h_ref: float, cutoff: float
) -> bool:
    """
    True when the run is creeping towards a divergence: the accepted step has
    collapsed relative to the largest one taken, the peak magnitude is past
    sqrt(cutoff) and it still grows, but only slowly, across the full history.
    """
    if len(hist_mag) < HISTORY_LENGTH or step >= STALL_STEP_RATIO * h_ref:
        return False
    first, latest = hist_mag[0].max(), hist_mag[-1].max()
    return latest >= math.sqrt(cutoff) and first < latest < STALL_GROWTH * first


def _blowup_record(
    species: Sequence[str],
    hist_t: Deque[float],
    hist_mag: Deque[np.ndarray],
    y: np.ndarray,
    cutoff: Optional[float],
    method: str,
) -> BlowupRecord:
    """
    Build the blow-up record of the first species to diverge.

    With ``cutoff`` None (step collapse) the largest species is taken and its last
    magnitude plays the role of the cutoff.
    """
    latest = hist_mag[-1]
    if cutoff is None:
        indices = [int(np.argmax(latest))]
    else:
        indices = [i for i in range(len(species)) if latest[i] >= cutoff]

    best = None
    for i in indices:
        tail_t, tail_m = _monotone_tail(hist_t, [m[i] for m in hist_mag])
        level = tail_m[-1] if cutoff is None else cutoff
        if len(tail_t) < 2:
            t_est, t_fit = tail_t[-1], float("nan")
        else:
            estimate = estimate_blowup_time(tail_t, tail_m, level)
            t_est, t_fit = estimate.t_estimate, estimate.t_fit
        if best is None or t_est < best[0]:
            best = (t_est, t_fit, i)

    t_est, t_fit, i = best
    values = y.reshape(len(species), -1)[i]
    sign = "+inf" if values[np.argmax(np.abs(values))] > 0 else "-inf"
    return BlowupRecord(
        component=species[i], sign=sign, t_estimate=t_est, method=method, t_fit=t_fit
    )


def run_rkf45(
    rhs: Rhs,
    u0: np.ndarray,
    species: Sequence[str],
    cfg: IntegratorConfig,
) -> RawSolution:
    """
    Integrate du/dt = rhs(t, u) from t = 0 to cfg.t_end with event detection.

    Args:
        rhs: right-hand side on arrays of shape (n_species, n_points).
        u0: initial state of that shape.
        species: names for the leading axis, used in the event log.
        cfg: solver settings.

    Returns:
        RawSolution with sample times, flattened states, status and events.
    """
    shape = u0.shape
    ns = shape[0]
    if ns != len(species):
        raise ValueError("leading axis of u0 must match the species names")
    if not np.all(np.isfinite(u0)):
        raise ValueError("initial state must be finite")

    def flat_rhs(t: float, y: np.ndarray) -> np.ndarray:
        return rhs(t, y.reshape(shape)).ravel()

    def minima(y: np.ndarray) -> np.ndarray:
        return y.reshape(y.shape[:-1] + shape).min(axis=-1)

    def magnitudes(y: np.ndarray) -> np.ndarray:
        return np.abs(y.reshape(shape)).max(axis=-1)

    dt = cfg.sample_dt
    eps = cfg.neg_eps
    t = 0.0
    y = np.array(u0, dtype=float).ravel()
    k1 = flat_rhs(t, y)
    h = cfg.h_init

    recorder = _Recorder()
    recorder.add(t, y)
    events = EventLog({name: [] for name in species})
    open_since: List[Optional[float]] = [
        0.0 if g < 0 else None for g in minima(y) + eps
    ]
    hist_t: Deque[float] = deque([t], maxlen=HISTORY_LENGTH)
    hist_mag: Deque[np.ndarray] = deque([magnitudes(y)], maxlen=HISTORY_LENGTH)

    status = SolverStatus.COMPLETED_HORIZON
    next_sample = 1
    accepted = rejected = 0
    h_ref = 0.0

    with np.errstate(over="ignore", invalid="ignore"):
        while t < cfg.t_end:
            h = min(h, cfg.h_max)
            last = t + h >= cfg.t_end
            if last:
                h = cfg.t_end - t

            y_new, err = rkf45_step(flat_rhs, t, y, h, k1)
            scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
            err_norm = float(np.max(np.abs(err) / scale))

            if not math.isfinite(err_norm) or err_norm > 1.0:
                rejected += 1
                if math.isfinite(err_norm):
                    h *= max(MIN_FACTOR, SAFETY * err_norm**-0.2)
                else:
                    h *= MIN_FACTOR
                if h < cfg.h_min:
                    growing = len(hist_mag) >= 3 and all(
                        hist_mag[-j].max() > hist_mag[-j - 1].max() for j in (1, 2)
                    )
                    if growing:
                        status = SolverStatus.BLOWUP_DETECTED
                        events.blowup = _blowup_record(
                            species, hist_t, hist_mag, y, None, "step_collapse"
                        )
                    else:
                        status = SolverStatus.STEP_COLLAPSE
                    logger.info("step size fell below h_min=%g at t=%.6g", cfg.h_min, t)
                    break
                continue

            t_new = cfg.t_end if last else t + h
            k_new = flat_rhs(t_new, y_new)
            dense = CubicHermiteSpline(
                [t, t_new], np.vstack([y, y_new]), np.vstack([k1, k_new]), axis=0
            )

            top = int(math.floor(t_new / dt * (1.0 + 1e-12)))
            sample_t = np.minimum(np.arange(next_sample, top + 1) * dt, t_new)
            next_sample = max(next_sample, top + 1)
            sample_y = dense(sample_t) if sample_t.size else np.empty((0, y.size))
            recorder.add_many(sample_t, sample_y)

            # Negativity: scan endpoints and interior samples for sign changes.
            interior = (sample_t > t) & (sample_t < t_new)
            check_t = np.concatenate([[t], sample_t[interior], [t_new]])
            check_y = np.vstack([y, sample_y[interior], y_new])
            g = minima(check_y) + eps
            for i, name in enumerate(species):
                negative = g[:, i] < 0
                for j in np.flatnonzero(negative[1:] != negative[:-1]):
                    t_cross = locate_zero_crossing(
                        lambda tau, i=i: minima(dense(tau))[i],
                        (check_t[j], check_t[j + 1]),
                        eps,
                    )
                    recorder.add(t_cross, dense(t_cross))
                    if negative[j + 1]:
                        open_since[i] = t_cross
                    else:
                        start = open_since[i]
                        if start is None:
                            start = check_t[j]
                        events.negativity_intervals[name].append((start, t_cross))
                        open_since[i] = None

            mags = magnitudes(y_new)
            hist_t.append(t_new)
            hist_mag.append(mags)
            accepted += 1
            step = t_new - t
            h_ref = max(h_ref, step)
            t, y, k1 = t_new, y_new, k_new
            recorder.add(t, y)

            if np.any(mags >= cfg.blowup_cutoff):
                status = SolverStatus.BLOWUP_DETECTED
                events.blowup = _blowup_record(
                    species, hist_t, hist_mag, y, cfg.blowup_cutoff, "cutoff_crossing"
                )
                break
            if _stalled(hist_mag, step, h_ref, cfg.blowup_cutoff):
                status = SolverStatus.BLOWUP_DETECTED
                events.blowup = _blowup_record(
                    species, hist_t, hist_mag, y, None, "step_collapse"
                )
                logger.info(
                    "step size collapsed to %.3g (largest %.3g) at t=%.6g, "
                    "max |y| = %.3g",
                    step,
                    h_ref,
                    t,
                    mags.max(),
                )
                break

            if err_norm == 0.0:
                h *= MAX_FACTOR
            else:
                h *= min(MAX_FACTOR, SAFETY * err_norm**-0.2)

    for i, name in enumerate(species):
        if open_since[i] is not None and open_since[i] < t:
            events.negativity_intervals[name].append((open_since[i], t))

    times, states = recorder.finish()
    logger.debug(
        "RKF45 finished at t=%.6g: status=%s, %d accepted / %d rejected steps",
        t,
        status.value,
        accepted,
        rejected,
    )
    return RawSolution(
        times=times,
        states=states,
        status=status,
        events=events,
        accepted_steps=accepted,
        rejected_steps=rejected,
    )
