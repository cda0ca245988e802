"""
Analytical checks and closed-form thresholds for the TYC systems.

  - positivity_criterion: samples the coordinate faces of a box of states and checks
    the Kamke sign condition (the i-th rate is >= 0 on the face x_i = 0)
  - stability_check: the cubic local-stability criterion for the trojan equilibrium
    (0, 0, 0, mu/delta) of the four-species system, cross-checked against the
    eigenvalues of a finite-difference Jacobian
  - threshold_*: blow-up bounds on initial data and stocking rate
"""

import logging
from dataclasses import dataclass, field
from typing import List, Mapping, Optional, Tuple

import numpy as np

from tyclab.models.params import DimensionalParams, ModelSpec, StateVector
from tyclab.models.tyc_models import _classic4_rates

logger = logging.getLogger(__name__)

DEFAULT_FACE_POINTS = 64


@dataclass(frozen=True)
class Witness:
    """A face point where the Kamke condition fails."""

    face: str
    state: StateVector
    rate: float


@dataclass
class PositivityReport:
    holds: bool
    witnesses: List[Witness] = field(default_factory=list)
    samples: int = 0


def positivity_criterion(
    model: ModelSpec,
    region: Mapping[str, Tuple[float, float]],
    points_per_axis: int = DEFAULT_FACE_POINTS,
    max_witnesses: int = 10,
) -> PositivityReport:
    """
    Check the Kamke condition on the coordinate faces of a box of states.

    Args:
        model: the model whose vector field is sampled.
        region: mapping species name -> (low, high) bounds, within the nonnegative
                orthant. Every species of the model must be present.
        points_per_axis: uniform grid resolution along each free axis of a face.
        max_witnesses: cap on the number of violating points returned.

    Returns:
        PositivityReport with ``holds`` and up to ``max_witnesses`` witnesses, the
        most negative rates first.
    """
    species = model.species
    missing = [name for name in species if name not in region]
    if missing:
        raise ValueError(f"region is missing bounds for {missing}")
    for name in species:
        lo, hi = region[name]
        if lo < 0 or hi < lo:
            raise ValueError(f"region bounds for {name} must satisfy 0 <= lo <= hi")

    axes = {
        name: np.linspace(region[name][0], region[name][1], points_per_axis)
        for name in species
    }

    candidates: List[Witness] = []
    samples = 0
    violations = 0
    for i, face in enumerate(species):
        free = [name for name in species if name != face]
        mesh = np.meshgrid(*(axes[name] for name in free), indexing="ij")
        u = np.zeros((len(species), mesh[0].size))
        for name, values in zip(free, mesh):
            u[species.index(name)] = values.ravel()
        rates = model.reaction(u)[i]
        samples += rates.size

        bad = np.flatnonzero(rates < 0.0)
        violations += bad.size
        worst = bad[np.argsort(rates[bad])][:max_witnesses]
        candidates.extend(
            Witness(
                face=f"{face}=0",
                state=StateVector.from_array(u[:, k], species),
                rate=float(rates[k]),
            )
            for k in worst
        )

    candidates.sort(key=lambda w: w.rate)
    report = PositivityReport(
        holds=violations == 0, witnesses=candidates[:max_witnesses], samples=samples
    )
    logger.debug(
        "Kamke check on %d face samples: holds=%s (%d violations)",
        samples,
        report.holds,
        violations,
    )
    return report


@dataclass
class StabilityReport:
    applicable: bool
    criterion_value: float
    extinction_stable: Optional[bool]
    trojan_state_stable: Optional[bool]
    equilibrium: Tuple[float, float, float, float]
    eigenvalues: np.ndarray
    jacobian_stable: bool

    @property
    def agrees(self) -> Optional[bool]:
        """Whether the cubic criterion and the Jacobian spectrum agree."""
        if self.trojan_state_stable is None:
            return None
        return self.trojan_state_stable == self.jacobian_stable


def stability_criterion(p: DimensionalParams) -> float:
    """beta*mu^2 - beta*K*delta*mu + K*delta^3."""
    return p.beta * p.mu**2 - p.beta * p.K * p.delta * p.mu + p.K * p.delta**3


def numerical_jacobian(
    p: DimensionalParams, x: np.ndarray, eps: float = 1e-6
) -> np.ndarray:
    """Central-difference Jacobian of the four-species reaction terms at ``x``."""
    x = np.asarray(x, dtype=float)
    n = x.size
    J = np.zeros((n, n))
    for j in range(n):
        step = eps * max(1.0, abs(x[j]))
        dx = np.zeros(n)
        dx[j] = step
        plus = np.array(_classic4_rates(p, *(x + dx)))
        minus = np.array(_classic4_rates(p, *(x - dx)))
        J[:, j] = (plus - minus) / (2.0 * step)
    return J


def stability_check(p: DimensionalParams) -> StabilityReport:
    """
    Classify the trojan equilibrium (0, 0, 0, mu/delta) of the four-species system.

    The cubic criterion is only claimed when delta/beta < K/16; otherwise the report
    is marked inapplicable and the criterion-based verdicts are None. The Jacobian
    eigenvalues are always computed.
    """
    applicable = p.beta > 0 and p.delta / p.beta < p.K / 16.0
    equilibrium = (0.0, 0.0, 0.0, p.mu / p.delta)
    eigenvalues = np.linalg.eigvals(numerical_jacobian(p, np.array(equilibrium)))
    jacobian_stable = bool(np.all(eigenvalues.real < 0.0))
    value = stability_criterion(p)

    if not applicable:
        logger.info("stability criterion inapplicable: delta/beta >= K/16")
        return StabilityReport(
            applicable=False,
            criterion_value=value,
            extinction_stable=None,
            trojan_state_stable=None,
            equilibrium=equilibrium,
            eigenvalues=eigenvalues,
            jacobian_stable=jacobian_stable,
        )

    return StabilityReport(
        applicable=True,
        criterion_value=value,
        extinction_stable=jacobian_stable if p.mu == 0.0 else None,
        trojan_state_stable=value > 0.0,
        equilibrium=equilibrium,
        eigenvalues=eigenvalues,
        jacobian_stable=jacobian_stable,
    )


# --- closed-form blow-up bounds ------------------------------------------------------


def threshold_f0(delta1: float, delta2: float, p: DimensionalParams) -> float:
    """
    Initial female level above which f blows up, given -delta2 < m < -delta1.

    (beta*delta2/2 + beta*delta2^2/(2K) + delta) / (beta*delta1/(2K))
    """
    if not 0 < delta1 <= delta2:
        raise ValueError("threshold_f0 requires 0 < delta1 <= delta2")
    if p.beta <= 0:
        raise ValueError("threshold_f0 requires beta > 0")
    numerator = p.beta * delta2 / 2.0 + p.beta * delta2**2 / (2.0 * p.K) + p.delta
    return numerator / (p.beta * delta1 / (2.0 * p.K))


def threshold_mu(delta2: float, p: DimensionalParams) -> float:
    """
    Stocking rate above which f blows up for any positive initial data.

    (beta*delta2/2 + (beta*delta2^2 + delta)/(2K)) / (beta*delta2/(2*K*delta))
    """
    if delta2 <= 0:
        raise ValueError("threshold_mu requires delta2 > 0")
    if p.beta <= 0:
        raise ValueError("threshold_mu requires beta > 0")
    numerator = p.beta * delta2 / 2.0 + (p.beta * delta2**2 + p.delta) / (2.0 * p.K)
    return numerator / (p.beta * delta2 / (2.0 * p.K * p.delta))


def threshold_mu_pde(delta2: float, p: DimensionalParams) -> float:
    """Stocking-rate bound for the reaction-diffusion system (same form as the ODE)."""
    return threshold_mu(delta2, p)


def threshold_m0(C1: float, delta3: float, p: DimensionalParams) -> float:
    """Negative initial male level beyond which m blows down: C1/(beta*delta3/(2K))."""
    if delta3 <= 0:
        raise ValueError("threshold_m0 requires delta3 > 0")
    if p.beta <= 0:
        raise ValueError("threshold_m0 requires beta > 0")
    return C1 / (p.beta * delta3 / (2.0 * p.K))


def mu_forces_negativity(p: DimensionalParams) -> bool:
    """mu > delta*K drives the steady supermale level above capacity."""
    return p.mu > p.delta * p.K
