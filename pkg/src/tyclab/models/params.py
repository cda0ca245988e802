"""
Parameter sets, model selection and state containers for the TYC model family.

Two parameter sets are supported:
  - DimensionlessParams (r, gamma, allee, diffusion): the canonical scaled form used
    for all three-species experiments
  - DimensionalParams (beta, delta, K, mu, D): the original birth/death form, used by
    the four-species system and by the dimensional three-species system

A ModelSpec couples a ModelKind with one parameter set and validates the pairing.
"""

from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Tuple, Union

import numpy as np

from tyclab.utils.validators import require_nonnegative, require_positive


class ModelFamily(str, Enum):
    """The model variants of the laboratory."""

    CLASSIC3 = "Classic3"
    CLASSIC4 = "Classic4"
    MODIFIED_ALLEE = "ModifiedAllee"
    MODIFIED_NO_ALLEE = "ModifiedNoAllee"
    EXP_LOGISTIC3 = "ExpLogistic3"


THREE_SPECIES: Tuple[str, ...] = ("f", "m", "s")
FOUR_SPECIES: Tuple[str, ...] = ("f", "m", "s", "r4")


@dataclass(frozen=True)
class DimensionlessParams:
    """Scaled parameters: r = beta*K/(2*delta), gamma = mu/(delta*K)."""

    r: float
    gamma: float = 0.0
    allee: Optional[float] = None
    diffusion: float = 0.0

    def __post_init__(self) -> None:
        require_nonnegative("r", self.r)
        require_nonnegative("gamma", self.gamma)
        require_nonnegative("diffusion", self.diffusion)
        if self.allee is not None and not 0.0 < self.allee < 1.0:
            raise ValueError(f"allee must lie in (0, 1), got {self.allee!r}")


@dataclass(frozen=True)
class DimensionalParams:
    """Birth rate beta, death rate delta, capacity K, stocking mu, diffusivity D."""

    beta: float
    delta: float
    K: float
    mu: float = 0.0
    D: float = 0.0

    def __post_init__(self) -> None:
        require_nonnegative("beta", self.beta)
        require_positive("delta", self.delta)
        require_positive("K", self.K)
        require_nonnegative("mu", self.mu)
        require_nonnegative("D", self.D)


Params = Union[DimensionlessParams, DimensionalParams]


@dataclass(frozen=True)
class ModelKind:
    kind: ModelFamily
    spatial: bool = False

    @property
    def species(self) -> Tuple[str, ...]:
        return FOUR_SPECIES if self.kind is ModelFamily.CLASSIC4 else THREE_SPECIES


@dataclass(frozen=True)
class StateVector:
    """
    Instantaneous population values.

    No sign constraint is imposed: negative values are exactly what the laboratory
    studies. ``r4`` is the trojan-female population and is only used by Classic4.
    """

    f: float
    m: float
    s: float
    r4: Optional[float] = None

    def as_array(self, species: Tuple[str, ...] = THREE_SPECIES) -> np.ndarray:
        values = [getattr(self, name) for name in species]
        if any(v is None for v in values):
            raise ValueError(f"state is missing a value for one of {species}")
        return np.array(values, dtype=float)

    @classmethod
    def from_array(
        cls, values, species: Tuple[str, ...] = THREE_SPECIES
    ) -> "StateVector":
        data = dict(zip(species, (float(v) for v in values)))
        return cls(**data)

    def is_finite(self) -> bool:
        values = [self.f, self.m, self.s] + ([] if self.r4 is None else [self.r4])
        return bool(np.all(np.isfinite(values)))


@dataclass(frozen=True)
class ModelSpec:
    """A model variant together with its parameter set."""

    kind: ModelKind
    params: Params

    def __post_init__(self) -> None:
        family = self.kind.kind
        if family is ModelFamily.CLASSIC4 and not isinstance(
            self.params, DimensionalParams
        ):
            raise ValueError("Classic4 is only defined with dimensional parameters")
        if family in (
            ModelFamily.MODIFIED_ALLEE,
            ModelFamily.MODIFIED_NO_ALLEE,
            ModelFamily.EXP_LOGISTIC3,
        ) and not isinstance(self.params, DimensionlessParams):
            raise ValueError(f"{family.value} requires dimensionless parameters")
        if family is ModelFamily.MODIFIED_ALLEE and self.params.allee is None:
            raise ValueError("ModifiedAllee requires the allee threshold to be set")

    @property
    def family(self) -> ModelFamily:
        return self.kind.kind

    @property
    def species(self) -> Tuple[str, ...]:
        return self.kind.species

    @property
    def is_dimensional(self) -> bool:
        return isinstance(self.params, DimensionalParams)

    @property
    def diffusion(self) -> float:
        if isinstance(self.params, DimensionalParams):
            return self.params.D
        return self.params.diffusion

    def with_gamma(self, gamma: float) -> "ModelSpec":
        """Return a copy with a different scaled introduction rate."""
        if not isinstance(self.params, DimensionlessParams):
            raise ValueError("gamma can only be varied on dimensionless models")
        return replace(self, params=replace(self.params, gamma=gamma))

    def reaction(self, u: np.ndarray) -> np.ndarray:
        """
        Evaluate the reaction terms on stacked species values.

        Args:
            u: array whose leading axis runs over ``self.species``; any trailing
               axes (e.g. grid points) are broadcast.

        Returns:
            array of the same shape holding the time derivatives.
        """
        # Imported here: tyc_models depends on this module's types.
        from tyclab.models.tyc_models import reaction_terms

        return reaction_terms(self, u)

    def nondimensional(self) -> "ModelSpec":
        """Convert a dimensional Classic3 spec into the canonical scaled form."""
        if not self.is_dimensional:
            return self
        if self.family is not ModelFamily.CLASSIC3:
            raise ValueError("only Classic3 has a dimensionless counterpart")
        from tyclab.models.tyc_models import nondimensionalize

        scaled, _ = nondimensionalize(self.params, StateVector(0.0, 0.0, 0.0))
        return ModelSpec(self.kind, scaled)
