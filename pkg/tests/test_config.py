import json

import pytest

from tyclab.config.experiment_config import (
    ConfigError,
    ExperimentConfig,
    apply_overrides,
    load_experiment_config,
    save_experiment_config,
)
from tyclab.models.params import ModelFamily, StateVector


def _write(path, data) -> str:
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


FIG6 = {
    "model": {"kind": "Classic3", "spatial": True, "r": 17.8125, "diffusion": 0.01},
    "initial": {
        "f": {"profile": "parabola"},
        "m": {"profile": "parabola"},
        "s": {"profile": "scaled_parabola", "s_max": 3},
    },
    "grid": {"n": 49, "bc": "dirichlet"},
    "integrator": {"t_end": 1.0},
    "analysis": {
        "compare": [
            {"kind": "ModifiedAllee", "label": "allee", "r": 17.8125, "allee": 0.05}
        ]
    },
    "output": {"directory": "out", "snapshot_times": [0, 0.1]},
}


def test_defaults_are_filled_in(tmp_path):
    config = load_experiment_config(_write(tmp_path / "e.json", {}))
    assert config.grid.n == 199
    assert config.integrator.t_end == 50.0
    assert config.analysis.bracket == (0.0, 3.0)
    full = config.to_dict()
    assert set(full) == {"model", "initial", "grid", "integrator", "analysis", "output"}
    assert full["integrator"]["blowup_cutoff"] == 1e8


def test_round_trip_is_identity(tmp_path):
    config = ExperimentConfig.from_dict(FIG6)
    assert ExperimentConfig.from_dict(config.to_dict()) == config


def test_write_read_write_is_byte_identical(tmp_path):
    first, second = tmp_path / "a.json", tmp_path / "b.json"
    save_experiment_config(ExperimentConfig.from_dict(FIG6), str(first))
    save_experiment_config(load_experiment_config(str(first)), str(second))
    assert first.read_bytes() == second.read_bytes()


@pytest.mark.parametrize(
    "data",
    [
        {"models": {}},
        {"model": {"kind": "Classic3", "rate": 1.0}},
        {"integrator": {"tolerance": 1e-6}},
        {"analysis": {"compare": [{"kind": "Classic3", "unknown": 1}]}},
    ],
)
def test_unknown_keys_are_rejected(tmp_path, data):
    with pytest.raises(ConfigError):
        load_experiment_config(_write(tmp_path / "e.json", data))


def test_empty_file_is_rejected(tmp_path):
    path = tmp_path / "empty.json"
    path.write_text("", encoding="utf-8")
    with pytest.raises(ConfigError, match="empty"):
        load_experiment_config(str(path))


def test_invalid_json_reports_position(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"model": {"kind": }', encoding="utf-8")
    with pytest.raises(ConfigError, match="line 1"):
        load_experiment_config(str(path))


def test_missing_file_is_a_config_error(tmp_path):
    with pytest.raises(ConfigError):
        load_experiment_config(str(tmp_path / "nope.json"))


@pytest.mark.parametrize(
    "data",
    [
        {"model": {"kind": "Classic5"}},
        {"integrator": {"blowup_cutoff": 10.0}},
        {"initial": {"s": {"profile": "gaussian"}}},
        {"initial": {"s": True}},
        {"analysis": {"axis": "f0"}},
        {"analysis": {"bracket": [0.0, 1.0, 2.0]}},
    ],
)
def test_invalid_values_are_rejected(data):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(data)


def test_overrides_apply_in_order():
    raw = {"initial": {"f": 0.3, "m": 0.3, "s": 0.1}}
    result = apply_overrides(
        raw,
        [
            "initial.s=2.5",
            "initial.s=2.75",
            "grid.bc=dirichlet",
            "analysis.bracket=[0, 2]",
            "model.spatial=true",
        ],
    )
    assert result["initial"]["s"] == 2.75
    assert result["grid"]["bc"] == "dirichlet"
    assert result["analysis"]["bracket"] == [0, 2]
    assert result["model"]["spatial"] is True
    # the input is left untouched
    assert raw["initial"]["s"] == 0.1


def test_nested_override_of_profile_parameter():
    result = apply_overrides(FIG6, ["initial.s.s_max=2"])
    assert result["initial"]["s"] == {"profile": "scaled_parabola", "s_max": 2}


@pytest.mark.parametrize("override", ["initial", "initial.s", "=3", "initial.f.x=1"])
def test_malformed_overrides(override):
    with pytest.raises(ConfigError):
        apply_overrides({"initial": {"f": 0.3}}, [override])


def test_model_building():
    config = ExperimentConfig.from_dict(
        {"model": {"kind": "ModifiedAllee", "r": 17.8125, "allee": 0.1}}
    )
    model = config.model.build()
    assert model.family is ModelFamily.MODIFIED_ALLEE
    assert model.params.allee == 0.1

    dimensional = ExperimentConfig.from_dict(
        {"model": {"kind": "Classic4", "beta": 1, "delta": 1, "K": 100, "mu": 1}}
    )
    assert dimensional.model.build().is_dimensional

    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({"model": {"beta": 1.0}}).model.build()
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({"model": {"kind": "Classic3"}}).model.build()


def test_initial_state_and_fields():
    config = ExperimentConfig.from_dict(FIG6)
    model = config.model.build()
    grid = config.grid.build()
    field = config.initial.spatial_field(grid, model.species)
    assert field.values.shape == (3, 49)
    assert field.values[2].max() == pytest.approx(3.0)

    with pytest.raises(ValueError):
        config.initial.state(model.species)

    scalar = ExperimentConfig.from_dict(
        {"initial": {"f": 0.3, "m": 0.3, "s": {"profile": "constant", "value": 2.5}}}
    )
    assert scalar.initial.state(("f", "m", "s")) == StateVector(0.3, 0.3, 2.5)


def test_dirichlet_grid_rejects_nonzero_boundary_values():
    config = ExperimentConfig.from_dict(
        {
            "initial": {"f": 0.3, "m": 0.3, "s": 2.5},
            "grid": {"n": 19, "bc": "dirichlet"},
        }
    )
    with pytest.raises(ValueError):
        config.initial.spatial_field(config.grid.build(), ("f", "m", "s"))


def test_missing_initial_values():
    config = ExperimentConfig.from_dict({"initial": {"f": 0.3}})
    with pytest.raises(ValueError):
        config.initial.state(("f", "m", "s"))
