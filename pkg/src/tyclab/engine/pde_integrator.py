"""
Method-of-lines engine for the reaction-diffusion TYC systems on (0, 1).

Space is discretised with second-order central differences on a uniform grid of
spacing h = 1/(n + 1); the stacked semi-discrete system is handed to the RKF45 core.

Boundary handling:
  - Dirichlet: unknowns live on the n interior nodes; boundary values are 0 and are
    never integrated
  - Neumann: unknowns live on all n + 2 nodes including x = 0 and x = 1; the
    no-flux condition is imposed with mirrored ghost nodes u[-1] = u[1]
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Mapping, Tuple

import numpy as np
import pandas as pd

from tyclab.engine.events import EventLog
from tyclab.engine.integrator_config import IntegratorConfig
from tyclab.engine.rkf45 import SolverStatus, run_rkf45
from tyclab.models.params import ModelSpec

logger = logging.getLogger(__name__)


class BoundaryCondition(str, Enum):
    NEUMANN = "neumann"
    DIRICHLET = "dirichlet"


@dataclass(frozen=True)
class SpatialGrid:
    """
    Uniform mesh on [0, 1] with n interior points and spacing h = 1/(n + 1).

    Neumann grids carry unknowns on all n + 2 nodes, boundaries included, and close
    the stencil with mirrored ghost values. Dirichlet grids carry only the n
    interior unknowns; the boundary values are the fixed zeros.
    """

    n: int = 199
    bc: BoundaryCondition = BoundaryCondition.NEUMANN

    def __post_init__(self) -> None:
        if self.n < 3:
            raise ValueError(f"grid needs n >= 3 interior points, got {self.n}")
        object.__setattr__(self, "bc", BoundaryCondition(self.bc))

    @property
    def h(self) -> float:
        return 1.0 / (self.n + 1)

    @property
    def all_nodes(self) -> np.ndarray:
        """Every node of the mesh, boundaries included."""
        return np.arange(self.n + 2) * self.h

    @property
    def nodes(self) -> np.ndarray:
        """Nodes carrying unknowns."""
        if self.bc is BoundaryCondition.DIRICHLET:
            return self.all_nodes[1:-1]
        return self.all_nodes

    @property
    def size(self) -> int:
        return self.nodes.size

    @property
    def quadrature_weights(self) -> np.ndarray:
        """Midpoint cells around interior nodes plus half-cells at the boundaries."""
        weights = np.full(self.size, self.h)
        if self.bc is BoundaryCondition.NEUMANN:
            weights[0] = weights[-1] = 0.5 * self.h
        return weights


def laplacian(values, grid: SpatialGrid) -> np.ndarray:
    """
    Second-order central-difference Laplacian along the last axis.

    Args:
        values: array whose last axis has length ``grid.size``.
        grid: the spatial grid and its boundary condition.
    """
    u = np.asarray(values, dtype=float)
    if u.shape[-1] != grid.size:
        raise ValueError(f"field has {u.shape[-1]} points, grid expects {grid.size}")
    if grid.bc is BoundaryCondition.NEUMANN:
        padded = np.concatenate([u[..., 1:2], u, u[..., -2:-1]], axis=-1)
    else:
        pad = [(0, 0)] * (u.ndim - 1) + [(1, 1)]
        padded = np.pad(u, pad)
    return (padded[..., :-2] - 2.0 * padded[..., 1:-1] + padded[..., 2:]) / grid.h**2


# --- initial profiles ----------------------------------------------------------------

PROFILE_PARAMETERS: Dict[str, Tuple[str, ...]] = {
    "constant": ("value",),
    "parabola": (),
    "scaled_parabola": ("s_max",),
}


@dataclass(frozen=True)
class ProfileSpec:
    """A named initial profile from the catalogue together with its parameters."""

    name: str
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.name not in PROFILE_PARAMETERS:
            raise ValueError(
                f"unknown profile {self.name!r}; "
                f"expected one of {sorted(PROFILE_PARAMETERS)}"
            )
        expected = set(PROFILE_PARAMETERS[self.name])
        if set(self.params) != expected:
            raise ValueError(
                f"profile {self.name!r} takes parameters {sorted(expected)}, "
                f"got {sorted(self.params)}"
            )

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.name == "constant":
            return np.full_like(x, float(self.params["value"]))
        if self.name == "parabola":
            return x * (1.0 - x)
        return 4.0 * float(self.params["s_max"]) * x * (1.0 - x)


@dataclass
class Field:
    """Per-species values on the grid nodes; ``values`` has shape (n_species, size)."""

    species: Tuple[str, ...]
    values: np.ndarray

    @classmethod
    def from_profiles(
        cls,
        grid: SpatialGrid,
        species: Tuple[str, ...],
        profiles: Mapping[str, ProfileSpec],
    ) -> "Field":
        """
        Sample catalogue profiles on the grid.

        Raises:
            ValueError: if a species has no profile, or a Dirichlet grid gets a
                        profile that does not vanish at x = 0 and x = 1.
        """
        rows = []
        for name in species:
            if name not in profiles:
                raise ValueError(f"no initial profile given for species {name!r}")
            profile = profiles[name]
            if grid.bc is BoundaryCondition.DIRICHLET:
                edges = profile.evaluate(np.array([0.0, 1.0]))
                if np.any(edges != 0.0):
                    raise ValueError(
                        f"Dirichlet boundaries need {name}(0) = {name}(1) = 0, "
                        f"profile {profile.name!r} gives {edges.tolist()}"
                    )
            rows.append(profile.evaluate(grid.nodes))
        return cls(species=species, values=np.vstack(rows))


@dataclass
class FieldTrajectory:
    """Field snapshots with per-snapshot spatial diagnostics."""

    times: np.ndarray
    snapshots: np.ndarray
    grid: SpatialGrid
    species: Tuple[str, ...]
    status: SolverStatus

    @property
    def min_values(self) -> np.ndarray:
        """Minimum over x of each species, shape (n_times, n_species)."""
        return self.snapshots.min(axis=-1)

    @property
    def min_m(self) -> np.ndarray:
        return self.min_values[:, self.species.index("m")]

    @property
    def max_norms(self) -> np.ndarray:
        return np.abs(self.snapshots).max(axis=-1)

    @property
    def l1_norms(self) -> np.ndarray:
        return np.abs(self.snapshots) @ self.grid.quadrature_weights

    def full_snapshots(self) -> np.ndarray:
        """Snapshots on every mesh node; Dirichlet boundary nodes are exactly 0."""
        if self.grid.bc is BoundaryCondition.DIRICHLET:
            pad = [(0, 0), (0, 0), (1, 1)]
            return np.pad(self.snapshots, pad)
        return self.snapshots

    def nearest_index(self, t: float) -> int:
        return int(np.argmin(np.abs(self.times - t)))

    def diagnostics_frame(self) -> pd.DataFrame:
        """One row per snapshot: t, min over x of m, max-norms and L1-norms."""
        data = {"t": self.times, "min_m": self.min_m}
        max_norms, l1_norms = self.max_norms, self.l1_norms
        for i, name in enumerate(self.species):
            data[f"max_{name}"] = max_norms[:, i]
        for i, name in enumerate(self.species):
            data[f"l1_{name}"] = l1_norms[:, i]
        return pd.DataFrame(data)


def integrate_pde(
    model: ModelSpec,
    fields0: Field,
    grid: SpatialGrid,
    cfg: IntegratorConfig = IntegratorConfig(),
) -> Tuple[FieldTrajectory, EventLog]:
    """
    Integrate the reaction-diffusion system by the method of lines.

    Negativity events are crossings of min over x of a species below -neg_eps;
    blow-up is declared when the max over x of |value| reaches the cutoff.
    """
    species = model.species
    if fields0.species != species:
        raise ValueError(f"field species {fields0.species} do not match {species}")
    if fields0.values.shape != (len(species), grid.size):
        raise ValueError(
            f"field shape {fields0.values.shape} does not match "
            f"({len(species)}, {grid.size})"
        )
    D = model.diffusion

    def rhs(t: float, u: np.ndarray) -> np.ndarray:
        return model.reaction(u) + D * laplacian(u, grid)

    raw = run_rkf45(rhs, fields0.values, species, cfg)
    trajectory = FieldTrajectory(
        times=raw.times,
        snapshots=raw.states.reshape(raw.times.size, len(species), grid.size),
        grid=grid,
        species=species,
        status=raw.status,
    )
    logger.info(
        "%s PDE run on %d %s nodes (D=%g): %s after %d steps",
        model.family.value,
        grid.size,
        grid.bc.value,
        D,
        raw.status.value,
        raw.accepted_steps,
    )
    return trajectory, raw.events
