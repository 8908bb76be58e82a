"""Outer optimisation loop: suggest, observe, check whether the current
polynomial order under-specifies the optimum, elevate and remap history.

Each completed tell appends observations, re-examines the incumbent's
coefficient profile, and raises the order by one when either the
derivative headroom is nearly exhausted (the adjacent-difference trigger)
or the fixed increment schedule comes due - never past ``max_order``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import acquisition as acq
from . import gp as gp_mod
from .acquisition import AcquisitionConfig
from .bernstein import (
    BernsteinPoly,
    RescaleRecord,
    ShapePrior,
    elevate,
    is_feasible,
    max_adjacent_difference,
)
from .errors import ConfigError, ProtocolError, StateError
from .gp import DesignPoint, Observation

TRIGGER_NONE = "none"
TRIGGER_DERIVATIVE = "derivative"
TRIGGER_SCHEDULE = "schedule"


@dataclass(frozen=True)
class OptimizerConfig:
    """Settings for one optimisation campaign."""

    prior: ShapePrior
    start_order: int = 5
    max_order: int = 10
    trigger_fraction: float = 0.95
    increment_period: int = 10
    max_iterations: int = 100
    acquisition: AcquisitionConfig = field(default_factory=AcquisitionConfig)
    aux_bounds: tuple[tuple[float, float], ...] = ()
    rescale: RescaleRecord = field(default_factory=RescaleRecord)
    negate: bool = False

    def __post_init__(self) -> None:
        if self.start_order > self.max_order:
            raise ConfigError(
                f"start_order {self.start_order} exceeds max_order {self.max_order}"
            )
        if self.start_order < self.prior.min_order():
            raise ConfigError(
                f"{self.prior.kind.value} prior needs order >= {self.prior.min_order()}"
            )
        if not 0.0 < self.trigger_fraction <= 1.0:
            raise ConfigError("trigger_fraction must lie in (0, 1]")
        if self.increment_period < 1:
            raise ConfigError("increment_period must be >= 1")
        if self.max_iterations < 1:
            raise ConfigError("max_iterations must be >= 1")
        for lo, hi in self.aux_bounds:
            if not hi > lo:
                raise ConfigError(f"aux bound ({lo}, {hi}) has nonpositive width")

    def to_json(self) -> dict:
        return {
            "prior": self.prior.to_json(),
            "start_order": self.start_order,
            "max_order": self.max_order,
            "trigger_fraction": self.trigger_fraction,
            "increment_period": self.increment_period,
            "max_iterations": self.max_iterations,
            "acquisition": self.acquisition.to_json(),
            "aux_bounds": [list(b) for b in self.aux_bounds],
            "rescale": self.rescale.to_json(),
            "negate": self.negate,
        }

    @classmethod
    def from_json(cls, payload: dict) -> "OptimizerConfig":
        try:
            prior = ShapePrior.from_json(payload["prior"])
        except KeyError as exc:
            raise ConfigError("config missing required key 'prior'") from exc
        kwargs: dict = {"prior": prior}
        for key in (
            "start_order",
            "max_order",
            "trigger_fraction",
            "increment_period",
            "max_iterations",
            "negate",
        ):
            if key in payload:
                kwargs[key] = payload[key]
        if "acquisition" in payload:
            kwargs["acquisition"] = AcquisitionConfig.from_json(payload["acquisition"])
        if "aux_bounds" in payload:
            kwargs["aux_bounds"] = tuple(tuple(b) for b in payload["aux_bounds"])
        if "rescale" in payload:
            kwargs["rescale"] = RescaleRecord.from_json(payload["rescale"])
        return cls(**kwargs)


@dataclass(frozen=True)
class IterationRecord:
    """Audit entry for one completed tell."""

    iteration: int
    order_before: int
    order_after: int
    trigger: str
    incumbent_value: float
    suggested: tuple[DesignPoint, ...]
    observed: tuple[float, ...]
    suppressed_trigger: str | None = None

    def __post_init__(self) -> None:
        if self.order_after not in (self.order_before, self.order_before + 1):
            raise StateError(
                f"order may rise by at most one: {self.order_before} -> {self.order_after}"
            )

    def to_json(self) -> dict:
        return {
            "iteration": self.iteration,
            "order_before": self.order_before,
            "order_after": self.order_after,
            "trigger": self.trigger,
            "suppressed_trigger": self.suppressed_trigger,
            "incumbent_value": self.incumbent_value,
            "suggested": [p.to_json() for p in self.suggested],
            "observed": list(self.observed),
        }

    @classmethod
    def from_json(cls, payload: dict) -> "IterationRecord":
        return cls(
            iteration=int(payload["iteration"]),
            order_before=int(payload["order_before"]),
            order_after=int(payload["order_after"]),
            trigger=payload["trigger"],
            suppressed_trigger=payload.get("suppressed_trigger"),
            incumbent_value=float(payload["incumbent_value"]),
            suggested=tuple(DesignPoint.from_json(p) for p in payload["suggested"]),
            observed=tuple(payload["observed"]),
        )


def underspecification_check(
    incumbent_alpha: Sequence[float],
    trigger_fraction: float,
    range_width: float = 1.0,
) -> bool:
    """Whether the incumbent's steepest adjacent coefficient step has nearly
    saturated the achievable range.

    The order-n derivative bound scales with the maximum adjacent
    difference d; once d exceeds ``trigger_fraction * range_width`` the
    current order is likely under-specifying the optimum's steepness.
    """
    d = max_adjacent_difference(incumbent_alpha)
    return d > trigger_fraction * range_width


def elevate_history(
    data: Sequence[Observation], from_order: int
) -> list[Observation]:
    """Re-express every stored coefficient vector at ``from_order + 1``.

    Outcomes and auxiliary values are untouched; the elevated polynomials
    are pointwise identical to the originals, so no information is lost.
    """
    out = []
    for obs in data:
        if len(obs.point.alpha) != from_order + 1:
            raise StateError(
                f"observation at order {len(obs.point.alpha) - 1}, expected {from_order}"
            )
        lifted = elevate(BernsteinPoly(from_order, obs.point.alpha))
        out.append(
            Observation(
                point=DesignPoint(lifted.coeffs, obs.point.aux),
                value=obs.value,
                batch_id=obs.batch_id,
                iteration=obs.iteration,
            )
        )
    return out


def incumbent(observations: Sequence[Observation]) -> Observation:
    """The observation with maximal outcome; earliest wins on ties."""
    if not observations:
        raise StateError("no observations yet; incumbent undefined")
    best = observations[0]
    for obs in observations[1:]:
        if obs.value > best.value:
            best = obs
    return best


@dataclass(frozen=True)
class StepResult:
    observations: tuple[Observation, ...]
    order: int
    record: IterationRecord
    suggestions: tuple[DesignPoint, ...]


def initial_suggestions(
    config: OptimizerConfig, rng: np.random.Generator
) -> tuple[DesignPoint, ...]:
    """Cold-start batch: feasible points chosen before any data exists."""
    points = acq.suggest_batch(
        None,
        config.prior,
        config.aux_bounds,
        config.acquisition,
        t=1,
        order=config.start_order,
        rng=rng,
    )
    return tuple(points)


def step(
    config: OptimizerConfig,
    observations: Sequence[Observation],
    order: int,
    iteration: int,
    pending_points: Sequence[DesignPoint],
    observed_values: Sequence[float],
    rng: np.random.Generator,
    generate_suggestions: bool = True,
) -> StepResult:
    """One loop body: absorb a completed batch, run the order triggers,
    elevate if needed, refit the surrogate and produce the next batch.

    ``iteration`` is the 1-based index of this tell; the schedule trigger
    fires when it divides ``increment_period`` exactly.  Both triggers are
    no-ops (but logged) once ``max_order`` is reached.  The caller turns
    ``generate_suggestions`` off on the final budgeted iteration.
    """
    if not pending_points:
        raise ProtocolError("no pending suggestions to resolve")
    if len(observed_values) != len(pending_points):
        raise ProtocolError(
            f"got {len(observed_values)} values for {len(pending_points)} pending points"
        )
    for p in pending_points:
        if len(p.alpha) != order + 1:
            raise StateError("pending point order does not match campaign order")

    new_obs = list(observations) + [
        Observation(point=p, value=float(y), batch_id=iteration, iteration=iteration)
        for p, y in zip(pending_points, observed_values)
    ]

    best = incumbent(new_obs)
    order_before = order
    reason = TRIGGER_NONE
    suppressed = None
    fired = None
    if underspecification_check(best.point.alpha, config.trigger_fraction):
        fired = TRIGGER_DERIVATIVE
    elif iteration % config.increment_period == 0:
        fired = TRIGGER_SCHEDULE
    if fired is not None:
        if order < config.max_order:
            new_obs = elevate_history(new_obs, order)
            order += 1
            reason = fired
        else:
            suppressed = fired

    suggestions: tuple[DesignPoint, ...] = ()
    if generate_suggestions:
        params = gp_mod.select_hyperparameters(new_obs, config.aux_bounds)
        surrogate = gp_mod.fit(new_obs, params, config.aux_bounds, standardize=True)
        suggestions = tuple(
            acq.suggest_batch(
                surrogate,
                config.prior,
                config.aux_bounds,
                config.acquisition,
                t=len(new_obs) + 1,
                order=order,
                rng=rng,
            )
        )
        for s in suggestions:
            if not is_feasible(config.prior, s.alpha, tol=1e-9):
                raise StateError("acquisition returned an infeasible point")

    record = IterationRecord(
        iteration=iteration,
        order_before=order_before,
        order_after=order,
        trigger=reason,
        suppressed_trigger=suppressed,
        incumbent_value=incumbent(new_obs).value,
        suggested=tuple(pending_points),
        observed=tuple(float(y) for y in observed_values),
    )
    return StepResult(
        observations=tuple(new_obs),
        order=order,
        record=record,
        suggestions=suggestions,
    )
