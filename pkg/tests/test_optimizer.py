"""Outer loop: triggers, history elevation, incumbent tracking."""

import numpy as np
import pytest

from bfosp.acquisition import AcquisitionConfig
from bfosp.bernstein import (
    BernsteinPoly,
    ShapeKind,
    ShapePrior,
    is_feasible,
    poly_eval_grid,
    sample_feasible,
)
from bfosp.errors import ConfigError, ProtocolError, StateError
from bfosp.gp import DesignPoint, Observation
from bfosp.optimizer import (
    IterationRecord,
    OptimizerConfig,
    elevate_history,
    incumbent,
    initial_suggestions,
    step,
    underspecification_check,
)

GRID = np.linspace(0.0, 1.0, 101)
INCREASING = ShapePrior(ShapeKind.INCREASING)


def small_config(**overrides):
    defaults = dict(
        prior=INCREASING,
        start_order=5,
        max_order=10,
        trigger_fraction=0.95,
        increment_period=10,
        max_iterations=50,
        acquisition=AcquisitionConfig(candidate_count=100, refine_steps=3, rng_seed=1),
    )
    defaults.update(overrides)
    return OptimizerConfig(**defaults)


# ---------------------------------------------------------------------------
# Trigger check
# ---------------------------------------------------------------------------


def test_trigger_fires_on_steep_step():
    assert underspecification_check([0.0, 0.96, 0.97, 1.0], 0.95)


def test_trigger_quiet_on_flat_and_gentle_profiles():
    assert not underspecification_check([0.4, 0.4, 0.4], 0.95)
    assert not underspecification_check([0.0, 0.5, 1.0], 0.95)


def test_trigger_scales_with_range_width():
    alpha = [0.0, 0.5, 1.0]
    assert underspecification_check(alpha, 0.95, range_width=0.5)
    assert not underspecification_check(alpha, 0.95, range_width=1.0)


# ---------------------------------------------------------------------------
# History elevation
# ---------------------------------------------------------------------------


def test_elevate_history_empty():
    assert elevate_history([], 5) == []


def test_elevate_history_single_linear():
    obs = Observation(DesignPoint((0.0, 1.0)), 0.8, batch_id=1, iteration=1)
    (lifted,) = elevate_history([obs], 1)
    assert lifted.point.alpha == (0.0, 0.5, 1.0)
    assert lifted.value == 0.8
    assert lifted.iteration == 1


def test_elevate_history_preserves_curves_and_feasibility():
    rng = np.random.default_rng(3)
    history = [
        Observation(DesignPoint(tuple(alpha)), float(rng.random()))
        for alpha in sample_feasible(INCREASING, 5, rng, 20)
    ]
    lifted = elevate_history(history, 5)
    for before, after in zip(history, lifted):
        p0 = BernsteinPoly.from_coeffs(before.point.alpha)
        p1 = BernsteinPoly.from_coeffs(after.point.alpha)
        np.testing.assert_allclose(
            poly_eval_grid(p1, GRID), poly_eval_grid(p0, GRID), atol=1e-12
        )
        assert is_feasible(INCREASING, after.point.alpha)
        assert after.value == before.value


def test_elevate_history_rejects_mixed_orders():
    history = [
        Observation(DesignPoint((0.0, 1.0)), 1.0),
        Observation(DesignPoint((0.0, 0.5, 1.0)), 1.0),
    ]
    with pytest.raises(StateError):
        elevate_history(history, 1)


# ---------------------------------------------------------------------------
# Incumbent
# ---------------------------------------------------------------------------


def test_incumbent_single():
    obs = Observation(DesignPoint((0.5,)), 1.0)
    assert incumbent([obs]) is obs


def test_incumbent_tie_takes_earliest():
    a = Observation(DesignPoint((0.1,)), 2.0, iteration=1)
    b = Observation(DesignPoint((0.9,)), 2.0, iteration=2)
    assert incumbent([a, b]) is a


def test_incumbent_matches_linear_scan():
    rng = np.random.default_rng(5)
    obs = [
        Observation(DesignPoint((float(rng.random()),)), float(rng.random()))
        for _ in range(30)
    ]
    best = max(range(30), key=lambda i: obs[i].value)
    assert incumbent(obs) is obs[best]


def test_incumbent_requires_data():
    with pytest.raises(StateError):
        incumbent([])


# ---------------------------------------------------------------------------
# Step
# ---------------------------------------------------------------------------


def feasible_points(config, rng, value_alpha=None):
    pts = initial_suggestions(config, rng)
    return list(pts)


def test_step_schedule_trigger_elevates():
    config = small_config(increment_period=1)  # every tell is on schedule
    rng = np.random.default_rng(7)
    points = feasible_points(config, rng)
    result = step(config, (), 5, 1, points, [0.5] * len(points), rng)
    assert result.order == 6
    assert result.record.trigger == "schedule"
    assert result.record.order_before == 5
    assert result.record.order_after == 6
    assert all(len(o.point.alpha) == 7 for o in result.observations)
    assert all(len(s.alpha) == 7 for s in result.suggestions)


def test_step_no_trigger_off_schedule():
    config = small_config(increment_period=10)
    rng = np.random.default_rng(9)
    points = feasible_points(config, rng)
    result = step(config, (), 5, 1, points, [0.5] * len(points), rng)
    assert result.order == 5
    assert result.record.trigger == "none"
    assert result.record.suppressed_trigger is None


def test_step_derivative_trigger():
    config = small_config()
    rng = np.random.default_rng(11)
    steep = DesignPoint((0.0, 0.97, 0.98, 0.99, 0.995, 1.0))
    result = step(config, (), 5, 1, [steep], [0.9], rng)
    assert result.record.trigger == "derivative"
    assert result.order == 6


def test_step_derivative_beats_schedule_when_both_fire():
    config = small_config(increment_period=1)
    rng = np.random.default_rng(13)
    steep = DesignPoint((0.0, 0.97, 0.98, 0.99, 0.995, 1.0))
    result = step(config, (), 5, 1, [steep], [0.9], rng)
    assert result.record.trigger == "derivative"
    assert result.order == 6  # exactly one increment


def test_step_suppresses_triggers_at_max_order():
    config = small_config(start_order=5, max_order=5, increment_period=1)
    rng = np.random.default_rng(15)
    steep = DesignPoint((0.0, 0.97, 0.98, 0.99, 0.995, 1.0))
    result = step(config, (), 5, 1, [steep], [0.9], rng)
    assert result.order == 5
    assert result.record.trigger == "none"
    assert result.record.suppressed_trigger == "derivative"


def test_step_protocol_errors():
    config = small_config()
    rng = np.random.default_rng(17)
    points = feasible_points(config, rng)
    with pytest.raises(ProtocolError):
        step(config, (), 5, 1, [], [], rng)
    with pytest.raises(ProtocolError):
        step(config, (), 5, 1, points, [0.5] * (len(points) + 1), rng)


def test_step_incumbent_value_recorded():
    config = small_config()
    rng = np.random.default_rng(19)
    points = feasible_points(config, rng)
    result = step(config, (), 5, 1, points, [0.42], rng)
    assert result.record.incumbent_value == pytest.approx(0.42)
    assert result.record.observed == (0.42,)


# ---------------------------------------------------------------------------
# Records and config plumbing
# ---------------------------------------------------------------------------


def test_record_round_trip():
    rec = IterationRecord(
        iteration=3,
        order_before=5,
        order_after=6,
        trigger="schedule",
        incumbent_value=0.7,
        suggested=(DesignPoint((0.1, 0.9)),),
        observed=(0.7,),
    )
    again = IterationRecord.from_json(rec.to_json())
    assert again == rec


def test_record_rejects_order_jump():
    with pytest.raises(StateError):
        IterationRecord(
            iteration=1,
            order_before=5,
            order_after=7,
            trigger="schedule",
            incumbent_value=0.0,
            suggested=(),
            observed=(),
        )


def test_config_round_trip_and_validation():
    config = small_config(aux_bounds=((0.0, 3.0),))
    again = OptimizerConfig.from_json(config.to_json())
    assert again == config
    with pytest.raises(ConfigError):
        small_config(start_order=11)
    with pytest.raises(ConfigError):
        small_config(trigger_fraction=0.0)
    with pytest.raises(ConfigError):
        small_config(increment_period=0)
    with pytest.raises(ConfigError):
        small_config(aux_bounds=((1.0, 1.0),))
    with pytest.raises(ConfigError):
        OptimizerConfig.from_json({})
    with pytest.raises(ConfigError):
        small_config(prior=ShapePrior(ShapeKind.UNIMODAL), start_order=2)
