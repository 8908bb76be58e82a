"""Durable campaign state and the ask/tell lifecycle.

A campaign is one optimisation run: its observations, current polynomial
order, pending suggestions and audit log live in a single human-readable
JSON document, written atomically (temp file + rename) after every
mutation.  Random draws are replayed exactly from a (seed, counter) pair,
so a campaign reloaded from disk continues byte-identically to the
process it came from.
"""

from __future__ import annotations

import json
import os
import uuid
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from filelock import FileLock

from . import acquisition as acq
from . import gp as gp_mod
from . import optimizer as opt
from .acquisition import AcquisitionConfig
from .bernstein import BernsteinPoly, ShapePrior, sample_curve
from .errors import ConfigError, ProtocolError, StateError
from .gp import DesignPoint, Observation
from .objectives import (
    SyntheticTarget,
    default_target,
    evaluation_request,
    synthetic_utility,
)
from .optimizer import IterationRecord, OptimizerConfig

SCHEMA_VERSION = 1

_STATE_KEYS = (
    "schema_version",
    "campaign_id",
    "config",
    "rng",
    "current_order",
    "observations",
    "pending",
    "log",
)


@dataclass(frozen=True)
class PendingSuggestion:
    token: str
    point: DesignPoint

    def to_json(self) -> dict:
        return {"token": self.token, **self.point.to_json()}

    @classmethod
    def from_json(cls, payload: dict) -> "PendingSuggestion":
        return cls(payload["token"], DesignPoint.from_json(payload))


@dataclass(frozen=True)
class CampaignState:
    """Immutable snapshot of a campaign; every operation returns a new one."""

    campaign_id: str
    config: OptimizerConfig
    rng_seed: int
    rng_counter: int = 0
    current_order: int = -1  # -1 until init fixes it to config.start_order
    observations: tuple[Observation, ...] = ()
    pending: tuple[PendingSuggestion, ...] = ()
    log: tuple[IterationRecord, ...] = ()
    last_tell: tuple[tuple[str, float], ...] | None = None

    def __post_init__(self) -> None:
        tokens = [p.token for p in self.pending]
        if len(set(tokens)) != len(tokens):
            raise StateError("pending tokens must be unique")
        for obs in self.observations:
            if len(obs.point.alpha) != self.current_order + 1:
                raise StateError(
                    "stored observation order disagrees with current order"
                )

    @property
    def iterations_completed(self) -> int:
        return len(self.log)

    def rng(self) -> np.random.Generator:
        return np.random.default_rng([self.rng_seed, self.rng_counter])

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "campaign_id": self.campaign_id,
            "config": self.config.to_json(),
            "rng": {"seed": self.rng_seed, "counter": self.rng_counter},
            "current_order": self.current_order,
            "observations": [o.to_json() for o in self.observations],
            "pending": [p.to_json() for p in self.pending],
            "log": [r.to_json() for r in self.log],
            "last_tell": (
                {t: y for t, y in self.last_tell} if self.last_tell is not None else None
            ),
        }

    @classmethod
    def from_json(cls, payload: dict) -> "CampaignState":
        missing = [k for k in _STATE_KEYS if k not in payload]
        if missing:
            raise StateError(f"state document missing keys: {missing}")
        if payload["schema_version"] != SCHEMA_VERSION:
            raise StateError(
                f"unsupported schema_version {payload['schema_version']!r}; "
                f"this build reads version {SCHEMA_VERSION}"
            )
        try:
            config = OptimizerConfig.from_json(payload["config"])
            state = cls(
                campaign_id=payload["campaign_id"],
                config=config,
                rng_seed=int(payload["rng"]["seed"]),
                rng_counter=int(payload["rng"]["counter"]),
                current_order=int(payload["current_order"]),
                observations=tuple(
                    Observation.from_json(o) for o in payload["observations"]
                ),
                pending=tuple(
                    PendingSuggestion.from_json(p) for p in payload["pending"]
                ),
                log=tuple(IterationRecord.from_json(r) for r in payload["log"]),
                last_tell=(
                    tuple((t, float(y)) for t, y in payload["last_tell"].items())
                    if payload.get("last_tell") is not None
                    else None
                ),
            )
        except (KeyError, TypeError, ValueError, ConfigError) as exc:
            raise StateError(f"corrupt state document: {exc}") from exc
        return state


def init(config: OptimizerConfig, campaign_id: str | None = None, seed: int = 0) -> CampaignState:
    """A fresh campaign at the configured start order, no data, no pending."""
    return CampaignState(
        campaign_id=campaign_id or uuid.uuid4().hex[:12],
        config=config,
        rng_seed=seed,
        current_order=config.start_order,
    )


def _make_tokens(campaign_id: str, iteration: int, count: int) -> list[str]:
    return [f"{campaign_id}-i{iteration:04d}-{j}" for j in range(count)]


def ask(state: CampaignState) -> tuple[CampaignState, tuple[PendingSuggestion, ...]]:
    """Current batch of suggestions; idempotent while a batch is unresolved."""
    if state.pending:
        return state, state.pending
    if state.iterations_completed >= state.config.max_iterations:
        raise ProtocolError(
            f"iteration budget exhausted ({state.config.max_iterations}); "
            "start a new campaign to continue"
        )
    rng = state.rng()
    cfg = state.config
    if state.observations:
        params = gp_mod.select_hyperparameters(state.observations, cfg.aux_bounds)
        surrogate = gp_mod.fit(state.observations, params, cfg.aux_bounds)
        points = acq.suggest_batch(
            surrogate,
            cfg.prior,
            cfg.aux_bounds,
            cfg.acquisition,
            t=len(state.observations) + 1,
            order=state.current_order,
            rng=rng,
        )
    else:
        points = opt.initial_suggestions(cfg, rng)
    tokens = _make_tokens(state.campaign_id, state.iterations_completed + 1, len(points))
    pending = tuple(PendingSuggestion(t, p) for t, p in zip(tokens, points))
    new_state = replace(state, rng_counter=state.rng_counter + 1, pending=pending)
    return new_state, pending


def tell(state: CampaignState, scores: Mapping[str, float]) -> CampaignState:
    """Resolve the pending batch and advance the loop by one iteration.

    The token set must match the pending batch exactly.  Re-sending the
    previous, already-applied tell is a no-op (tokens act as idempotency
    keys); anything else that does not match is rejected without touching
    the state.
    """
    scores = {str(t): float(y) for t, y in scores.items()}
    if not state.pending:
        if state.last_tell is not None and scores == dict(state.last_tell):
            return state
        raise ProtocolError("no pending suggestions; nothing to tell")
    pending_tokens = [p.token for p in state.pending]
    missing = [t for t in pending_tokens if t not in scores]
    unknown = [t for t in scores if t not in pending_tokens]
    if missing or unknown:
        if state.last_tell is not None and scores == dict(state.last_tell):
            return state
        parts = []
        if missing:
            parts.append(f"missing tokens {missing}")
        if unknown:
            parts.append(f"unknown tokens {unknown}")
        raise ProtocolError("tell does not match pending batch: " + "; ".join(parts))

    sign = -1.0 if state.config.negate else 1.0
    values = [sign * scores[t] for t in pending_tokens]
    iteration = state.iterations_completed + 1
    result = opt.step(
        config=state.config,
        observations=state.observations,
        order=state.current_order,
        iteration=iteration,
        pending_points=[p.point for p in state.pending],
        observed_values=values,
        rng=state.rng(),
        generate_suggestions=iteration < state.config.max_iterations,
    )
    tokens = _make_tokens(
        state.campaign_id, state.iterations_completed + 2, len(result.suggestions)
    )
    return replace(
        state,
        rng_counter=state.rng_counter + 1,
        current_order=result.order,
        observations=result.observations,
        pending=tuple(
            PendingSuggestion(t, p) for t, p in zip(tokens, result.suggestions)
        ),
        log=state.log + (result.record,),
        last_tell=tuple(sorted(scores.items())),
    )


def status(state: CampaignState) -> dict:
    """Summary document served by the CLI and the HTTP API."""
    inc = None
    if state.observations:
        best = opt.incumbent(state.observations)
        sign = -1.0 if state.config.negate else 1.0
        inc = {
            "value": sign * best.value,
            "alpha": list(best.point.alpha),
            "aux": list(best.point.aux),
            "iteration": best.iteration,
        }
    last = state.log[-1] if state.log else None
    return {
        "campaign_id": state.campaign_id,
        "current_order": state.current_order,
        "iterations_completed": state.iterations_completed,
        "observation_count": len(state.observations),
        "pending_tokens": [p.token for p in state.pending],
        "incumbent": inc,
        "last_trigger": last.trigger if last else None,
        "last_suppressed_trigger": last.suppressed_trigger if last else None,
        "negate": state.config.negate,
        "max_iterations": state.config.max_iterations,
        "batch_size": state.config.acquisition.batch_size,
        "done": (
            state.iterations_completed >= state.config.max_iterations
            and not state.pending
        ),
    }


def export_curve(
    state: CampaignState, which: str = "incumbent", grid_size: int = 101, index: int = 0
) -> dict:
    """A sampled curve in application units, per the configured rescaling."""
    if which == "incumbent":
        if not state.observations:
            raise StateError("no observations yet; incumbent curve undefined")
        point = opt.incumbent(state.observations).point
    elif which == "suggestion":
        if not state.pending:
            raise StateError("no pending suggestions to export")
        if not 0 <= index < len(state.pending):
            raise StateError(f"suggestion index {index} out of range")
        point = state.pending[index].point
    else:
        raise ConfigError(f"which must be 'incumbent' or 'suggestion', got {which!r}")
    poly = BernsteinPoly.from_coeffs(point.alpha)
    return state.config.rescale.apply(sample_curve(poly, grid_size))


def suggestion_payloads(state: CampaignState, grid_size: int = 101) -> list[dict]:
    """Pending suggestions as evaluation requests with rescaled curves."""
    out = []
    for p in state.pending:
        curve = state.config.rescale.apply(
            sample_curve(BernsteinPoly.from_coeffs(p.point.alpha), grid_size)
        )
        out.append(evaluation_request(p.token, curve, p.point.aux))
    return out


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def save_state(state: CampaignState, path: str | os.PathLike) -> None:
    """Write the state document atomically: temp file in place, then rename."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    data = json.dumps(state.to_json(), indent=1)
    with open(tmp, "w") as fh:
        fh.write(data)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def load_state(path: str | os.PathLike) -> CampaignState:
    path = Path(path)
    if not path.exists():
        raise StateError(f"no campaign file at {path}")
    try:
        payload = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise StateError(f"campaign file {path} is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise StateError(f"campaign file {path} must hold a JSON object")
    return CampaignState.from_json(payload)


class Campaign:
    """Convenience wrapper pairing a state snapshot with its storage path.

    All mutations persist before returning; with ``path=None`` the campaign
    lives purely in memory (used by the synthetic benchmark driver).  One
    writer per file is enforced through a sibling lock file.
    """

    def __init__(self, state: CampaignState, path: str | os.PathLike | None = None):
        self.state = state
        self.path = Path(path) if path is not None else None
        self._lock = FileLock(str(self.path) + ".lock") if self.path else None

    @classmethod
    def create(
        cls,
        config: OptimizerConfig,
        path: str | os.PathLike | None = None,
        campaign_id: str | None = None,
        seed: int = 0,
    ) -> "Campaign":
        campaign = cls(init(config, campaign_id=campaign_id, seed=seed), path)
        campaign._persist()
        return campaign

    @classmethod
    def open(cls, path: str | os.PathLike) -> "Campaign":
        return cls(load_state(path), path)

    def _persist(self) -> None:
        if self.path is None:
            return
        save_state(self.state, self.path)
        log_path = self.path.with_suffix(".log.jsonl")
        with open(log_path, "w") as fh:
            for record in self.state.log:
                fh.write(json.dumps(record.to_json()) + "\n")

    def _locked(self):
        if self._lock is None:
            import contextlib

            return contextlib.nullcontext()
        return self._lock

    def ask(self, grid_size: int = 101) -> list[dict]:
        with self._locked():
            self.state, _ = ask(self.state)
            self._persist()
            return suggestion_payloads(self.state, grid_size)

    def tell(self, scores: Mapping[str, float]) -> dict:
        with self._locked():
            self.state = tell(self.state, scores)
            self._persist()
            return status(self.state)

    def status(self) -> dict:
        return status(self.state)

    def export_curve(self, which: str = "incumbent", grid_size: int = 101, index: int = 0) -> dict:
        return export_curve(self.state, which, grid_size, index)

    def history(self) -> list[dict]:
        return [r.to_json() for r in self.state.log]


# ---------------------------------------------------------------------------
# Closed-loop synthetic benchmark driver
# ---------------------------------------------------------------------------

_PRIOR_FOR_SHAPE = {"decreasing": "decreasing", "unimodal": "unimodal"}


def synthetic_config(
    shape: str,
    prior_kind: str | None = None,
    seed: int = 0,
    batch_size: int = 1,
    max_iterations: int = 40,
) -> OptimizerConfig:
    """The benchmark configuration: order 5 to 10, schedule period 10,
    derivative trigger at 0.95, sequential suggestions unless asked for a
    batch."""
    kind = prior_kind or _PRIOR_FOR_SHAPE[shape]
    prior = ShapePrior.from_json({"kind": kind})
    return OptimizerConfig(
        prior=prior,
        start_order=5,
        max_order=10,
        trigger_fraction=0.95,
        increment_period=10,
        max_iterations=max_iterations,
        acquisition=AcquisitionConfig(batch_size=batch_size, rng_seed=seed),
    )


def run_synthetic(
    shape: str,
    iterations: int = 40,
    seed: int = 0,
    prior_kind: str | None = None,
    target: SyntheticTarget | None = None,
    batch_size: int = 1,
    path: str | os.PathLike | None = None,
) -> dict:
    """Run the full loop against a bundled benchmark target.

    Returns per-iteration incumbent utilities, the trigger log and the
    final order, which is what the acceptance checks and the CLI report.
    """
    if target is None:
        target = default_target(shape)
    config = synthetic_config(shape, prior_kind, seed, batch_size, iterations)
    campaign = Campaign.create(config, path=path, seed=seed)
    for _ in range(iterations):
        requests = campaign.ask()
        scores = {}
        for req in requests:
            alpha = next(
                p.point.alpha
                for p in campaign.state.pending
                if p.token == req["token"]
            )
            poly = BernsteinPoly.from_coeffs(alpha)
            scores[req["token"]] = synthetic_utility(target, poly)
        campaign.tell(scores)
    records = campaign.history()
    incumbents = [r["incumbent_value"] for r in records]
    return {
        "campaign_id": campaign.state.campaign_id,
        "shape": shape,
        "prior": campaign.state.config.prior.kind.value,
        "seed": seed,
        "iterations": iterations,
        "incumbents": incumbents,
        "final_order": campaign.state.current_order,
        "final_incumbent": incumbents[-1] if incumbents else None,
        "triggers": [r["trigger"] for r in records],
        "records": records,
    }


def iterations_to_reach(incumbents: Sequence[float], threshold: float) -> int | None:
    """1-based iteration index at which the incumbent first reaches the
    threshold, or None if it never does."""
    for i, v in enumerate(incumbents, start=1):
        if v >= threshold:
            return i
    return None
