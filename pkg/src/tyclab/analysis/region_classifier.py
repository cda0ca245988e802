"""
Maps a simulation outcome to one of three regions:

  Region 1  Positive          no negativity, no blow-up
  Region 2  NegativeNoBlowup  some component dips below -neg_eps, no blow-up
  Region 3  Blowup            a component reaches the blow-up cutoff
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

from tyclab.engine.events import EventLog
from tyclab.engine.integrator_config import IntegratorConfig
from tyclab.engine.ode_integrator import integrate
from tyclab.engine.pde_integrator import Field, SpatialGrid, integrate_pde
from tyclab.engine.rkf45 import SolverStatus
from tyclab.models.params import ModelSpec, StateVector


class IndeterminateError(RuntimeError):
    """The solver collapsed without growth, so no region can be assigned."""


class Region(str, Enum):
    POSITIVE = "Positive"
    NEGATIVE_NO_BLOWUP = "NegativeNoBlowup"
    BLOWUP = "Blowup"

    @property
    def rank(self) -> int:
        return _RANKS[self]


_RANKS = {Region.POSITIVE: 0, Region.NEGATIVE_NO_BLOWUP: 1, Region.BLOWUP: 2}


@dataclass
class Outcome:
    region: Region
    events: EventLog
    status: SolverStatus = SolverStatus.COMPLETED_HORIZON


def outcome_from_events(status: SolverStatus, events: EventLog) -> Outcome:
    """
    Classify a finished run.

    Raises:
        IndeterminateError: if the run ended in StepCollapse.
    """
    if status is SolverStatus.STEP_COLLAPSE:
        raise IndeterminateError("step size collapsed without solution growth")
    if events.blowup is not None:
        return Outcome(Region.BLOWUP, events, status)
    if events.has_negativity():
        return Outcome(Region.NEGATIVE_NO_BLOWUP, events, status)
    return Outcome(Region.POSITIVE, events, status)


def classify(
    model: ModelSpec,
    initial: Union[StateVector, Field],
    cfg: IntegratorConfig = IntegratorConfig(),
    grid: Optional[SpatialGrid] = None,
) -> Outcome:
    """
    Run the model and assign the region of its outcome.

    Args:
        model: model specification.
        initial: a StateVector for the ODE engine, or a Field (with ``grid``) for the
                 PDE engine.
        cfg: solver settings.
        grid: spatial grid, required when ``initial`` is a Field.
    """
    if isinstance(initial, Field):
        if grid is None:
            raise ValueError("a spatial grid is required to classify a field")
        trajectory, events = integrate_pde(model, initial, grid, cfg)
    else:
        trajectory, events = integrate(model, initial, cfg)
    return outcome_from_events(trajectory.status, events)
