"""
Loader for experiment configuration files (.json).

An experiment file has six sections, every one optional:
{
    "model": {"kind": "Classic3", "r": 17.8125, "gamma": 0.0},
    "initial": {"f": 0.3, "m": 0.3, "s": {"profile": "scaled_parabola", "s_max": 3}},
    "grid": {"n": 199, "bc": "neumann"},
    "integrator": {"t_end": 50.0, "blowup_cutoff": 1e8},
    "analysis": {"axis": "s0", "boundary": "R1/2", "bracket": [0.0, 3.0]},
    "output": {"directory": "output", "snapshot_times": [0.0, 0.1]}
}

Units: everything is dimensionless (time in 1/delta, populations in K) unless the
model section carries dimensional parameters (beta, delta, K, mu, D), in which
case the model, its initial values and its times are in the original units.

Unknown keys are rejected at every level. ``to_dict`` fills in every default, so a
saved file is a complete record of the experiment.
"""

import json
import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from tyclab.analysis.threshold_search import Axis, Boundary
from tyclab.engine.integrator_config import IntegratorConfig
from tyclab.engine.pde_integrator import (
    BoundaryCondition,
    Field,
    ProfileSpec,
    SpatialGrid,
)
from tyclab.models.params import (
    DimensionalParams,
    DimensionlessParams,
    ModelFamily,
    ModelKind,
    ModelSpec,
    StateVector,
)

logger = logging.getLogger(__name__)

InitialValue = Union[float, Dict[str, Any]]


class ConfigError(ValueError):
    """Raised for unreadable files, unknown keys and invalid values."""


def _check_keys(section: str, raw: Dict[str, Any], allowed: Sequence[str]) -> None:
    if not isinstance(raw, dict):
        raise ConfigError(f"section {section!r} must be an object, got {raw!r}")
    unknown = sorted(set(raw) - set(allowed))
    if unknown:
        raise ConfigError(
            f"unknown key(s) {unknown} in section {section!r}; "
            f"allowed: {sorted(allowed)}"
        )


def _build(cls, section: str, raw: Optional[Dict[str, Any]]):
    raw = {} if raw is None else raw
    _check_keys(section, raw, [f.name for f in fields(cls)])
    try:
        return cls(**raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid section {section!r}: {exc}") from exc


@dataclass
class ModelSection:
    """
    Model selection and parameters.

    Dimensionless form: r, gamma, allee, diffusion.
    Dimensional form (Classic3 or Classic4): beta, delta, K, mu, D.
    """

    kind: str = ModelFamily.CLASSIC3.value
    spatial: bool = False
    label: Optional[str] = None
    r: Optional[float] = None
    gamma: float = 0.0
    allee: Optional[float] = None
    diffusion: float = 0.0
    beta: Optional[float] = None
    delta: Optional[float] = None
    K: Optional[float] = None
    mu: float = 0.0
    D: float = 0.0

    def __post_init__(self) -> None:
        ModelFamily(self.kind)

    @property
    def is_dimensional(self) -> bool:
        return any(v is not None for v in (self.beta, self.delta, self.K))

    def build(self) -> ModelSpec:
        kind = ModelKind(ModelFamily(self.kind), self.spatial)
        if self.is_dimensional:
            missing = [k for k in ("beta", "delta", "K") if getattr(self, k) is None]
            if missing:
                raise ValueError(f"dimensional model is missing {missing}")
            params = DimensionalParams(self.beta, self.delta, self.K, self.mu, self.D)
        else:
            if self.r is None:
                raise ValueError("dimensionless model needs r")
            params = DimensionlessParams(self.r, self.gamma, self.allee, self.diffusion)
        return ModelSpec(kind, params)


def _check_initial_value(name: str, value: InitialValue) -> None:
    if isinstance(value, bool):
        raise ValueError(f"initial value of {name} must be a number or a profile")
    if isinstance(value, (int, float)):
        return
    if isinstance(value, dict) and "profile" in value:
        _profile(value)
        return
    raise ValueError(
        f"initial value of {name} must be a number or a profile, got {value!r}"
    )


def _profile(value: InitialValue) -> ProfileSpec:
    if isinstance(value, dict):
        params = {k: float(v) for k, v in value.items() if k != "profile"}
        return ProfileSpec(value["profile"], params)
    return ProfileSpec("constant", {"value": float(value)})


@dataclass
class InitialSection:
    """Initial value per species: a number, or {"profile": name, <parameters>}."""

    f: Optional[InitialValue] = None
    m: Optional[InitialValue] = None
    s: Optional[InitialValue] = None
    r4: Optional[InitialValue] = None

    def __post_init__(self) -> None:
        for name in ("f", "m", "s", "r4"):
            value = getattr(self, name)
            if value is not None:
                _check_initial_value(name, value)

    def _require(self, species: Tuple[str, ...]) -> None:
        missing = [name for name in species if getattr(self, name) is None]
        if missing:
            raise ValueError(f"initial values missing for {missing}")

    def state(self, species: Tuple[str, ...]) -> StateVector:
        """Scalar initial state; constant profiles count as scalars."""
        self._require(species)
        values = {}
        for name in species:
            profile = _profile(getattr(self, name))
            if profile.name != "constant":
                raise ValueError(
                    f"ODE runs need scalar initial values, {name} has profile "
                    f"{profile.name!r}"
                )
            values[name] = float(profile.params["value"])
        return StateVector(**values)

    def spatial_field(self, grid: SpatialGrid, species: Tuple[str, ...]) -> Field:
        self._require(species)
        profiles = {name: _profile(getattr(self, name)) for name in species}
        return Field.from_profiles(grid, species, profiles)


@dataclass
class GridSection:
    n: int = 199
    bc: str = BoundaryCondition.NEUMANN.value

    def build(self) -> SpatialGrid:
        return SpatialGrid(self.n, BoundaryCondition(self.bc))


@dataclass
class AnalysisSection:
    """Threshold-search and region-map settings."""

    axis: str = "s0"
    boundary: str = "R1/2"
    bracket: Tuple[float, float] = (0.0, 3.0)
    tol: float = 1e-4
    f0m0: float = 0.3
    f0m0_range: Tuple[float, float] = (0.1, 0.5)
    resolution: int = 9
    upper: float = 10.0
    s0: float = 0.0
    compare: List[ModelSection] = field(default_factory=list)

    def __post_init__(self) -> None:
        Axis(self.axis)
        Boundary(self.boundary)
        self.bracket = tuple(float(v) for v in self.bracket)
        self.f0m0_range = tuple(float(v) for v in self.f0m0_range)
        if len(self.bracket) != 2 or len(self.f0m0_range) != 2:
            raise ValueError("bracket and f0m0_range take exactly two values")
        self.compare = [
            c if isinstance(c, ModelSection) else _build(ModelSection, "compare", c)
            for c in self.compare
        ]


@dataclass
class OutputSection:
    directory: str = "output"
    snapshot_times: Tuple[float, ...] = ()

    def __post_init__(self) -> None:
        self.snapshot_times = tuple(float(t) for t in self.snapshot_times)


SECTIONS = ("model", "initial", "grid", "integrator", "analysis", "output")


@dataclass
class ExperimentConfig:
    model: ModelSection = field(default_factory=ModelSection)
    initial: InitialSection = field(default_factory=InitialSection)
    grid: GridSection = field(default_factory=GridSection)
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    analysis: AnalysisSection = field(default_factory=AnalysisSection)
    output: OutputSection = field(default_factory=OutputSection)

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> "ExperimentConfig":
        _check_keys("<root>", raw, SECTIONS)
        return cls(
            model=_build(ModelSection, "model", raw.get("model")),
            initial=_build(InitialSection, "initial", raw.get("initial")),
            grid=_build(GridSection, "grid", raw.get("grid")),
            integrator=_build(IntegratorConfig, "integrator", raw.get("integrator")),
            analysis=_build(AnalysisSection, "analysis", raw.get("analysis")),
            output=_build(OutputSection, "output", raw.get("output")),
        )

    def to_dict(self) -> Dict[str, Any]:
        data = {name: asdict(getattr(self, name)) for name in SECTIONS}
        # Tuples become lists.
        return json.loads(json.dumps(data))


def _parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(raw: Dict[str, Any], overrides: Sequence[str]) -> Dict[str, Any]:
    """
    Apply "section.key=value" overrides in order; later overrides win.

    Values are JSON-decoded when possible (numbers, booleans, lists, objects) and
    kept as strings otherwise. Keys may be nested, e.g. "initial.s.s_max=3".

    Returns:
        a new dict; ``raw`` is left untouched.
    """
    result = json.loads(json.dumps(raw))
    for item in overrides:
        key, sep, text = item.partition("=")
        path = [part for part in key.strip().split(".") if part]
        if not sep or len(path) < 2:
            raise ConfigError(f"override {item!r} must look like section.key=value")
        target = result
        for part in path[:-1]:
            node = target.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {item!r}: {part!r} is not a section")
            target = node
        target[path[-1]] = _parse_value(text)
    return result


def read_config_dict(path: str) -> Dict[str, Any]:
    """Read the raw JSON object of an experiment file."""
    text = Path(path).read_text(encoding="utf-8")
    if not text.strip():
        raise ConfigError(f"{path}: empty configuration file")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return raw


def load_experiment_config(
    path: str, overrides: Sequence[str] = ()
) -> ExperimentConfig:
    """
    Load an experiment file and apply command-line overrides.

    Args:
        path: file path
        overrides: "section.key=value" strings, applied in order

    Returns:
        ExperimentConfig

    Raises:
        ConfigError: on unreadable, empty or invalid files and unknown keys.
    """
    try:
        raw = read_config_dict(path)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    config = ExperimentConfig.from_dict(apply_overrides(raw, overrides))
    logger.debug("loaded experiment %s with %d override(s)", path, len(overrides))
    return config


def save_experiment_config(config: ExperimentConfig, path: str) -> None:
    """Write the full experiment (defaults included) as indented JSON."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(json.dumps(config.to_dict(), indent=2) + "\n", encoding="utf-8")
