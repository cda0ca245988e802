import numpy as np
import pytest

import tyclab.analysis.threshold_search as ts
from tyclab.analysis.region_classifier import IndeterminateError, Region
from tyclab.analysis.threshold_search import (
    Axis,
    Boundary,
    BracketInvalidError,
    NonMonotoneScanError,
    ThresholdCurve,
    ThresholdPoint,
    axis_problem,
    compare_thresholds,
    curve_shape,
    find_threshold,
    is_weakly_ordered,
    region_map,
    worker_count,
)
from tyclab.engine.integrator_config import IntegratorConfig
from tyclab.models.params import (
    DimensionalParams,
    DimensionlessParams,
    ModelFamily,
    ModelKind,
    ModelSpec,
)

R = 17.8125
CLASSIC3 = ModelSpec(ModelKind(ModelFamily.CLASSIC3), DimensionlessParams(R))
MODIFIED_ALLEE = ModelSpec(
    ModelKind(ModelFamily.MODIFIED_ALLEE), DimensionlessParams(R, allee=0.05)
)
MODIFIED_NO_ALLEE = ModelSpec(
    ModelKind(ModelFamily.MODIFIED_NO_ALLEE), DimensionlessParams(R)
)


def _fake_classifier(lower, upper=None):
    """
    Stand-in for classify_on_axis with thresholds lower(f0) and upper(f0).

    ``upper`` None means the model never blows up.
    """

    def classify_on_axis(model, f0m0, axis, value, cfg, s0=0.0):
        if value < lower(f0m0):
            return Region.POSITIVE
        if upper is None or value < upper(f0m0):
            return Region.NEGATIVE_NO_BLOWUP
        return Region.BLOWUP

    return classify_on_axis


@pytest.fixture(autouse=True)
def single_worker(monkeypatch):
    """Sweeps run in-process so monkeypatched classifiers are seen."""
    monkeypatch.setenv(ts.WORKERS_ENV, "1")


@pytest.fixture
def fake_thresholds(monkeypatch):
    """s*(f0) = 1.2 - f0 and s**(f0) = 3 - 2 f0."""
    monkeypatch.setattr(
        ts,
        "classify_on_axis",
        _fake_classifier(lambda f0: 1.2 - f0, lambda f0: 3.0 - 2.0 * f0),
    )


def test_boundary_sides():
    assert not Boundary.R12.is_above(Region.POSITIVE)
    assert Boundary.R12.is_above(Region.NEGATIVE_NO_BLOWUP)
    assert Boundary.R12.is_above(Region.BLOWUP)
    assert not Boundary.R23.is_above(Region.NEGATIVE_NO_BLOWUP)
    assert Boundary.R23.is_above(Region.BLOWUP)


def test_weak_ordering():
    P, N, B = Region.POSITIVE, Region.NEGATIVE_NO_BLOWUP, Region.BLOWUP
    assert is_weakly_ordered([P, P, N, N, B])
    assert is_weakly_ordered([P, B])
    assert not is_weakly_ordered([P, N, P])
    assert not is_weakly_ordered([B, N])


def test_axis_problem():
    model, x0 = axis_problem(CLASSIC3, 0.3, Axis.S0, 1.5)
    assert (x0.f, x0.m, x0.s) == (0.3, 0.3, 1.5)
    assert model is CLASSIC3

    model, x0 = axis_problem(CLASSIC3, 0.3, Axis.GAMMA, 0.7, s0=0.2)
    assert model.params.gamma == 0.7
    assert x0.s == 0.2

    dimensional = ModelSpec(
        ModelKind(ModelFamily.CLASSIC3), DimensionalParams(1.0, 1.0, 100.0)
    )
    with pytest.raises(ValueError):
        axis_problem(dimensional, 0.3, Axis.S0, 1.0)


def test_bisection_converges_on_fake_boundary(fake_thresholds):
    estimate = find_threshold(
        CLASSIC3, 0.3, Axis.S0, Boundary.R12, (0.0, 2.0), tol=1e-6
    )
    assert estimate.value == pytest.approx(0.9, abs=1e-6)
    assert estimate.below is Region.POSITIVE
    assert estimate.above is Region.NEGATIVE_NO_BLOWUP

    upper = find_threshold(CLASSIC3, 0.3, Axis.S0, Boundary.R23, (0.9, 5.0), tol=1e-6)
    assert upper.value == pytest.approx(2.4, abs=1e-6)
    assert upper.above is Region.BLOWUP


def test_bracket_must_straddle_boundary(fake_thresholds):
    with pytest.raises(BracketInvalidError):
        find_threshold(CLASSIC3, 0.3, Axis.S0, Boundary.R12, (0.0, 0.1))
    with pytest.raises(BracketInvalidError):
        find_threshold(CLASSIC3, 0.3, Axis.S0, Boundary.R23, (0.0, 2.0))
    with pytest.raises(ValueError):
        find_threshold(CLASSIC3, 0.3, Axis.S0, Boundary.R12, (2.0, 0.0))


def test_non_monotone_scan_is_an_error(monkeypatch):
    def classify_on_axis(model, f0m0, axis, value, cfg, s0=0.0):
        if 0.5 <= value < 0.8:
            return Region.NEGATIVE_NO_BLOWUP
        return Region.POSITIVE if value < 1.5 else Region.NEGATIVE_NO_BLOWUP

    monkeypatch.setattr(ts, "classify_on_axis", classify_on_axis)
    with pytest.raises(NonMonotoneScanError):
        find_threshold(CLASSIC3, 0.3, Axis.S0, Boundary.R12, (0.0, 2.0))


def test_unverified_threshold_is_flagged(monkeypatch, caplog):
    base = _fake_classifier(lambda f0: 0.9)

    def classify_on_axis(model, f0m0, axis, value, cfg, s0=0.0):
        # a thin positive pocket just above the boundary, missed by the bisection
        if 0.90001 < value < 0.9002:
            return Region.POSITIVE
        return base(model, f0m0, axis, value, cfg, s0)

    monkeypatch.setattr(ts, "classify_on_axis", classify_on_axis)
    estimate = find_threshold(
        CLASSIC3, 0.3, Axis.S0, Boundary.R12, (0.0, 3.0), tol=1e-4
    )
    assert estimate.value == pytest.approx(0.9, abs=1e-4)
    assert estimate.above is Region.POSITIVE
    assert not estimate.verified
    assert estimate.status == "unverified"
    assert "unverified" in caplog.text

    point = ThresholdPoint.from_estimate(estimate)
    assert (point.status, point.above) == ("unverified", Region.POSITIVE)
    curve = ThresholdCurve(Axis.S0, Boundary.R12, [point])
    assert curve.resolved()[0].size == 0
    row = curve.to_frame().iloc[0]
    assert row["status"] == "unverified"
    assert row["critical"] == estimate.value


def test_map_points_carry_neighbour_regions(fake_thresholds):
    rmap = region_map(CLASSIC3, (0.1, 0.5), Axis.S0, resolution=3, tol=1e-4)
    for point in rmap.lower.points:
        assert point.status == "ok"
        assert point.below is Region.POSITIVE
        assert point.above is Region.NEGATIVE_NO_BLOWUP
    for point in rmap.upper.points:
        assert point.below is Region.NEGATIVE_NO_BLOWUP
        assert point.above is Region.BLOWUP


def test_region_map_on_fake_thresholds(fake_thresholds):
    rmap = region_map(CLASSIC3, (0.1, 0.5), Axis.S0, resolution=5, tol=1e-6)
    f0, lower = rmap.lower.resolved()
    _, upper = rmap.upper.resolved()
    assert f0 == pytest.approx([0.1, 0.2, 0.3, 0.4, 0.5])
    assert lower == pytest.approx(1.2 - f0, abs=1e-6)
    assert upper == pytest.approx(3.0 - 2.0 * f0, abs=1e-6)
    assert np.all(lower < upper)
    assert not rmap.upper.absent

    frame = rmap.to_frame()
    assert list(frame.columns) == ["f0m0", "critical", "boundary", "status"]
    assert set(frame["boundary"]) == {"R1/2", "R2/3"}


def test_region_map_marks_missing_blowup_curve(monkeypatch):
    monkeypatch.setattr(ts, "classify_on_axis", _fake_classifier(lambda f0: 0.5))
    rmap = region_map(MODIFIED_ALLEE, (0.1, 0.5), Axis.S0, resolution=3, tol=1e-4)
    assert rmap.upper.absent
    assert rmap.upper.points == []
    assert len(rmap.lower.resolved()[0]) == 3
    absent_rows = rmap.to_frame().query("boundary == 'R2/3'")
    assert list(absent_rows["status"]) == ["absent"]


def test_region_map_records_point_failures(monkeypatch):
    base = _fake_classifier(lambda f0: 1.0, lambda f0: 2.0)

    def classify_on_axis(model, f0m0, axis, value, cfg, s0=0.0):
        if f0m0 > 0.45:
            raise IndeterminateError("step size collapsed")
        return base(model, f0m0, axis, value, cfg, s0)

    monkeypatch.setattr(ts, "classify_on_axis", classify_on_axis)
    rmap = region_map(CLASSIC3, (0.1, 0.5), Axis.S0, resolution=3, tol=1e-4)
    statuses = [p.status for p in rmap.lower.points]
    assert statuses[:2] == ["ok", "ok"]
    assert statuses[2].startswith("failed")
    assert rmap.lower.points[2].critical is None


def test_worker_count_reads_environment(monkeypatch):
    monkeypatch.delenv(ts.WORKERS_ENV, raising=False)
    assert worker_count() == 1
    monkeypatch.setenv(ts.WORKERS_ENV, "4")
    assert worker_count() == 4
    assert worker_count(2) == 2


def test_curve_shape_flags():
    f0 = np.linspace(0.1, 0.5, 9)
    line = curve_shape(f0, 1.2 - f0)
    assert line.monotone_decreasing and not line.non_smooth

    kinked = curve_shape(f0, np.where(f0 < 0.2, 3.0 - 10.0 * f0, 1.2 - f0))
    assert kinked.monotone_decreasing and kinked.non_smooth

    rising = curve_shape(f0, f0)
    assert not rising.monotone_decreasing


def test_compare_thresholds_table(fake_thresholds):
    comparison = compare_thresholds(
        {"classic": CLASSIC3, "no_allee": MODIFIED_NO_ALLEE},
        Axis.S0,
        (0.1, 0.5),
        resolution=3,
        tol=1e-4,
    )
    assert list(comparison.table.columns) == [
        "f0m0",
        "classic:R1/2",
        "classic:R2/3",
        "no_allee:R1/2",
        "no_allee:R2/3",
    ]
    assert comparison.shapes["classic"].monotone_decreasing
    assert comparison.table["classic:R1/2"].to_numpy() == pytest.approx(
        [1.1, 0.9, 0.7], abs=1e-4
    )


def test_compare_single_model_matches_region_map(fake_thresholds):
    comparison = compare_thresholds({"classic": CLASSIC3}, resolution=3, tol=1e-4)
    rmap = region_map(CLASSIC3, resolution=3, tol=1e-4)
    assert comparison.table["classic:R1/2"].to_numpy() == pytest.approx(
        rmap.lower.resolved()[1]
    )
    assert comparison.table["classic:R2/3"].to_numpy() == pytest.approx(
        rmap.upper.resolved()[1]
    )


@pytest.mark.slow
def test_critical_supermale_level_reference_value():
    estimate = find_threshold(
        CLASSIC3, 0.3, Axis.S0, Boundary.R12, (0.0, 2.0), tol=1e-3
    )
    assert estimate.value == pytest.approx(0.9194, abs=0.01)
    assert estimate.below is Region.POSITIVE
    assert estimate.above is not Region.POSITIVE


def test_bracket_without_boundary_is_rejected():
    with pytest.raises(BracketInvalidError):
        find_threshold(CLASSIC3, 0.3, Axis.S0, Boundary.R12, (0.0, 0.1))


@pytest.mark.slow
def test_blowup_threshold_below_reference_load():
    cfg = IntegratorConfig()
    star = find_threshold(CLASSIC3, 0.4, Axis.S0, Boundary.R12, (0.0, 2.5), 1e-3, cfg)
    double_star = find_threshold(
        CLASSIC3, 0.4, Axis.S0, Boundary.R23, (star.value, 2.5), 1e-3, cfg
    )
    assert star.value < double_star.value <= 2.5


@pytest.mark.slow
def test_classic_region_map_shape():
    rmap = region_map(CLASSIC3, (0.1, 0.5), Axis.S0, resolution=3, tol=1e-3)
    _, lower = rmap.lower.resolved()
    _, upper = rmap.upper.resolved()
    assert len(lower) == len(upper) == 3
    assert np.all(lower < upper)
    for point in rmap.lower.points:
        assert point.status == "ok"
        assert point.below is Region.POSITIVE
        assert point.above is not Region.POSITIVE
    for point in rmap.upper.points:
        assert point.status == "ok"
        assert point.below is not Region.BLOWUP
        assert point.above is Region.BLOWUP


@pytest.mark.slow
def test_gamma_thresholds_are_flat():
    rmap = region_map(CLASSIC3, (0.1, 0.5), Axis.GAMMA, resolution=5, tol=1e-3)
    for curve in (rmap.lower, rmap.upper):
        _, values = curve.resolved()
        assert len(values) == 5
        assert values.max() - values.min() < 0.05 * values.mean()


@pytest.mark.slow
@pytest.mark.parametrize("model", [MODIFIED_ALLEE, MODIFIED_NO_ALLEE])
def test_modified_models_never_blow_up(model):
    s_values = [0.0, 2.5, 5.0, 7.5, 10.0]
    for f0 in (0.1, 0.3, 0.5):
        regions = ts.scan_axis(model, f0, Axis.S0, s_values, IntegratorConfig())
        assert Region.BLOWUP not in regions
        assert regions[0] is Region.POSITIVE


@pytest.mark.slow
def test_modified_no_allee_threshold_decreases():
    rmap = region_map(MODIFIED_NO_ALLEE, (0.1, 0.5), Axis.S0, resolution=5, tol=1e-3)
    assert rmap.upper.absent
    f0, lower = rmap.lower.resolved()
    assert len(lower) == 5
    assert curve_shape(f0, lower).monotone_decreasing


@pytest.mark.slow
def test_modified_allee_region_map_has_no_blowup_curve():
    rmap = region_map(MODIFIED_ALLEE, (0.1, 0.5), Axis.S0, resolution=3, tol=1e-3)
    assert rmap.upper.absent
    f0, lower = rmap.lower.resolved()
    assert f0 == pytest.approx([0.1, 0.3, 0.5])
    assert lower == pytest.approx([0.42, 0.79, 0.60], abs=0.05)
    # the Allee term bends the curve: it is not monotone in f0
    assert not curve_shape(f0, lower).monotone_decreasing


@pytest.mark.slow
def test_parallel_sweep_matches_serial():
    serial = region_map(CLASSIC3, (0.2, 0.4), Axis.S0, resolution=2, tol=1e-2)
    parallel = region_map(
        CLASSIC3, (0.2, 0.4), Axis.S0, resolution=2, tol=1e-2, workers=2
    )
    assert parallel.lower.points == serial.lower.points
    assert parallel.upper.points == serial.upper.points
