"""
ODE engine: integrates a spatially homogeneous model from a StateVector.
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from tyclab.engine.events import EventLog
from tyclab.engine.integrator_config import IntegratorConfig
from tyclab.engine.rkf45 import SolverStatus, run_rkf45
from tyclab.models.params import ModelSpec, StateVector

logger = logging.getLogger(__name__)


@dataclass
class Trajectory:
    """Time samples of the solution; ``states`` has shape (n_samples, n_species)."""

    times: np.ndarray
    states: np.ndarray
    species: Tuple[str, ...]
    status: SolverStatus

    def component(self, name: str) -> np.ndarray:
        return self.states[:, self.species.index(name)]

    def value_at(self, name: str, t: float) -> float:
        """Linear interpolation of one component between recorded samples."""
        return float(np.interp(t, self.times, self.component(name)))

    @property
    def final_state(self) -> StateVector:
        return StateVector.from_array(self.states[-1], self.species)


def integrate(
    model: ModelSpec, x0: StateVector, cfg: IntegratorConfig = IntegratorConfig()
) -> Tuple[Trajectory, EventLog]:
    """
    Integrate ``model`` from ``x0`` with the adaptive RKF45 pair.

    Args:
        model: a non-spatial model specification.
        x0: initial populations (r4 required for Classic4).
        cfg: solver settings.

    Returns:
        (Trajectory, EventLog). A blow-up halts the run at the first component to
        reach the cutoff; StepCollapse status means h_min was reached without growth.
    """
    if not x0.is_finite():
        raise ValueError("initial state must be finite")
    species = model.species
    u0 = x0.as_array(species).reshape(len(species), 1)

    def rhs(t: float, u: np.ndarray) -> np.ndarray:
        return model.reaction(u)

    raw = run_rkf45(rhs, u0, species, cfg)
    trajectory = Trajectory(
        times=raw.times,
        states=raw.states.reshape(raw.times.size, len(species)),
        species=species,
        status=raw.status,
    )
    logger.info(
        "%s run from %s: %s after %d steps",
        model.family.value,
        x0,
        raw.status.value,
        raw.accepted_steps,
    )
    return trajectory, raw.events
