"""Confidence-bound acquisition over the shape-feasible coefficient set.

The next design point maximises mean + sqrt(beta) * std over feasible
candidates (sample-then-refine search), and batches follow the
UCB-plus-pure-exploration recipe: the first point by confidence bound,
the rest by posterior-variance maximisation against a surrogate whose
input set already contains the earlier picks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import gp as gp_mod
from .bernstein import ShapeKind, ShapePrior, is_feasible, project_feasible, sample_feasible
from .errors import ConfigError, DomainError
from .gp import DesignPoint, GpSurrogate, KernelParams, Observation

_REFINE_STEP_STD = 0.05
_REFINE_SHRINK = 0.7
_MIN_SEPARATION = 1e-6


@dataclass(frozen=True)
class AcquisitionConfig:
    """Search settings for the constrained acquisition maximisation."""

    delta: float = 0.1
    candidate_count: int = 2000
    refine_steps: int = 25
    batch_size: int = 1
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.delta < 1.0:
            raise ConfigError(f"delta must lie in (0, 1), got {self.delta}")
        if self.candidate_count < 1:
            raise ConfigError("candidate_count must be >= 1")
        if self.refine_steps < 0:
            raise ConfigError("refine_steps must be >= 0")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")

    def to_json(self) -> dict:
        return {
            "delta": self.delta,
            "candidate_count": self.candidate_count,
            "refine_steps": self.refine_steps,
            "batch_size": self.batch_size,
            "rng_seed": self.rng_seed,
        }

    @classmethod
    def from_json(cls, payload: dict) -> "AcquisitionConfig":
        known = {k: payload[k] for k in cls.__dataclass_fields__ if k in payload}
        return cls(**known)


def beta(t: int, dim: int, delta: float) -> float:
    """Confidence-width schedule 2*ln(t^(d/2+2) * pi^2 / (3*delta)).

    Grows logarithmically with the iteration index t (>= 1), so exploration
    widens slowly as evaluations accumulate.
    """
    if t < 1:
        raise DomainError(f"iteration index must be >= 1, got {t}")
    return 2.0 * ((dim / 2.0 + 2.0) * math.log(t) + 2.0 * math.log(math.pi) - math.log(3.0 * delta))


def ucb(surrogate: GpSurrogate, x: DesignPoint, beta_val: float) -> float:
    """Upper confidence bound mean + sqrt(beta) * std at a single point."""
    if beta_val < 0:
        raise DomainError(f"beta must be >= 0, got {beta_val}")
    mean, var = surrogate.predict(x)
    return mean + math.sqrt(beta_val) * math.sqrt(var)


def _ucb_values(surrogate: GpSurrogate, X: np.ndarray, beta_val: float) -> np.ndarray:
    mean, var = surrogate.predict_many(X)
    return mean + math.sqrt(beta_val) * np.sqrt(var)


def _draw_aux(
    rng: np.random.Generator, aux_bounds: Sequence[tuple[float, float]], count: int
) -> np.ndarray:
    if not aux_bounds:
        return np.zeros((count, 0))
    lo = np.array([b[0] for b in aux_bounds])
    hi = np.array([b[1] for b in aux_bounds])
    return lo + rng.random((count, len(aux_bounds))) * (hi - lo)


def _draw_candidates(
    prior: ShapePrior,
    order: int,
    aux_bounds: Sequence[tuple[float, float]],
    count: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Feasible coefficient rows plus, for unimodal searches, each row's peak index."""
    if prior.kind is ShapeKind.UNIMODAL and prior.mode_index is None:
        modes = list(range(1, order))
        per = [count // len(modes)] * len(modes)
        for i in range(count - sum(per)):
            per[i] += 1
        blocks, mode_rows = [], []
        for l, c in zip(modes, per):
            if c == 0:
                continue
            blocks.append(sample_feasible(prior.with_mode(l), order, rng, c))
            mode_rows.append(np.full(c, l))
        return np.vstack(blocks), np.concatenate(mode_rows)
    alphas = sample_feasible(prior, order, rng, count)
    l = prior.mode_index if prior.kind is ShapeKind.UNIMODAL else -1
    return alphas, np.full(count, l)


def _refine(
    objective,
    prior: ShapePrior,
    aux_bounds: Sequence[tuple[float, float]],
    alpha: np.ndarray,
    aux: np.ndarray,
    mode_index: int,
    steps: int,
    rng: np.random.Generator,
    reject_near: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Greedy local search: Gaussian steps with shrinking scale, projected
    back to the feasible set, accepted only on improvement."""
    lo = np.array([b[0] for b in aux_bounds]) if aux_bounds else np.zeros(0)
    hi = np.array([b[1] for b in aux_bounds]) if aux_bounds else np.zeros(0)
    best_val = objective(np.concatenate([alpha, aux])[None, :])[0]
    scale = _REFINE_STEP_STD
    for _ in range(steps):
        cand_alpha = project_feasible(
            prior, alpha + rng.normal(0.0, scale, alpha.size), mode_index if mode_index >= 0 else None
        )
        if aux.size:
            u_norm = (aux - lo) / (hi - lo)
            u_norm = np.clip(u_norm + rng.normal(0.0, scale, aux.size), 0.0, 1.0)
            cand_aux = lo + u_norm * (hi - lo)
        else:
            cand_aux = aux
        x = np.concatenate([cand_alpha, cand_aux])
        if reject_near is not None and reject_near.size:
            if np.min(np.linalg.norm(reject_near - x, axis=1)) < _MIN_SEPARATION:
                scale *= _REFINE_SHRINK
                continue
        val = objective(x[None, :])[0]
        if val > best_val:
            alpha, aux, best_val = cand_alpha, cand_aux, val
        scale *= _REFINE_SHRINK
    return alpha, aux, best_val


def _random_feasible_point(
    prior: ShapePrior,
    order: int,
    aux_bounds: Sequence[tuple[float, float]],
    rng: np.random.Generator,
) -> DesignPoint:
    if prior.kind is ShapeKind.UNIMODAL and prior.mode_index is None:
        l = int(rng.integers(1, order))
        alpha = sample_feasible(prior.with_mode(l), order, rng, 1)[0]
    else:
        alpha = sample_feasible(prior, order, rng, 1)[0]
    aux = _draw_aux(rng, aux_bounds, 1)[0]
    return DesignPoint(tuple(alpha), tuple(aux))


def maximize_constrained(
    surrogate: GpSurrogate | None,
    prior: ShapePrior,
    aux_bounds: Sequence[tuple[float, float]],
    cfg: AcquisitionConfig,
    t: int,
    order: int,
    rng: np.random.Generator | None = None,
    diagnostics: dict | None = None,
) -> DesignPoint:
    """Best feasible design point under the confidence-bound criterion.

    With no surrogate yet (cold start) a feasible random point is returned.
    Otherwise the best of ``candidate_count`` feasible draws is polished by
    the greedy refinement, which can only improve the acquisition value.
    Deterministic for a fixed seed; candidate ties break on lowest index.
    Passing a ``diagnostics`` dict records the pool's best score and the
    returned point's score, so callers can assert the refinement never
    loses ground.
    """
    if rng is None:
        rng = np.random.default_rng([cfg.rng_seed, t])
    if surrogate is None:
        return _random_feasible_point(prior, order, aux_bounds, rng)
    if surrogate.n_alpha != order + 1:
        raise DomainError(
            f"surrogate was fit at order {surrogate.n_alpha - 1}, asked for {order}"
        )

    dim = order + 1 + len(aux_bounds)
    beta_val = beta(t, dim, cfg.delta)
    alphas, modes = _draw_candidates(prior, order, aux_bounds, cfg.candidate_count, rng)
    auxes = _draw_aux(rng, aux_bounds, cfg.candidate_count)
    X = np.hstack([alphas, auxes])

    def objective(rows: np.ndarray) -> np.ndarray:
        return _ucb_values(surrogate, rows, beta_val)

    scores = objective(X)
    best_idx = int(np.argmax(scores))
    alpha, aux, final = _refine(
        objective,
        prior,
        aux_bounds,
        alphas[best_idx],
        auxes[best_idx],
        int(modes[best_idx]),
        cfg.refine_steps,
        rng,
    )
    if diagnostics is not None:
        diagnostics["pool_best"] = float(scores[best_idx])
        diagnostics["final"] = float(final)
    point = DesignPoint(tuple(alpha), tuple(aux))
    assert is_feasible(prior, point.alpha, tol=1e-9)
    return point


def suggest_batch(
    surrogate: GpSurrogate | None,
    prior: ShapePrior,
    aux_bounds: Sequence[tuple[float, float]],
    cfg: AcquisitionConfig,
    t: int,
    order: int,
    rng: np.random.Generator | None = None,
    diagnostics: dict | None = None,
) -> list[DesignPoint]:
    """A batch of ``batch_size`` feasible, pairwise-distinct design points.

    The first point maximises the confidence bound; each further point
    maximises posterior variance of a surrogate refit on the training
    inputs plus the picks so far (placeholder outcomes - the variance does
    not depend on them), which steers the batch towards unexplored,
    mutually distant regions.  A ``diagnostics`` dict collects per-point
    pool-best and final scores (confidence bound for the first point,
    variance for the rest).
    """
    if rng is None:
        rng = np.random.default_rng([cfg.rng_seed, t])
    first_diag: dict | None = {} if diagnostics is not None else None
    first = maximize_constrained(
        surrogate, prior, aux_bounds, cfg, t, order, rng, diagnostics=first_diag
    )
    chosen = [first]
    if diagnostics is not None:
        diagnostics["pool_best"] = [first_diag.get("pool_best")]
        diagnostics["final"] = [first_diag.get("final")]

    if surrogate is not None:
        base_params = surrogate.params
        base_data = [
            Observation(DesignPoint(tuple(x[: order + 1]), tuple(x[order + 1 :])), 0.0)
            for x in _rows_from_surrogate(surrogate, order, aux_bounds)
        ]
    else:
        base_params = KernelParams.defaults_for_dim(order + 1 + len(aux_bounds))
        base_data = []

    for _ in range(1, cfg.batch_size):
        augmented = base_data + [Observation(p, 0.0) for p in chosen]
        aug = gp_mod.fit(augmented, base_params, aux_bounds, standardize=False)
        taken = np.vstack([p.vector() for p in chosen])

        alphas, modes = _draw_candidates(prior, order, aux_bounds, cfg.candidate_count, rng)
        auxes = _draw_aux(rng, aux_bounds, cfg.candidate_count)
        X = np.hstack([alphas, auxes])

        def objective(rows: np.ndarray, _aug=aug) -> np.ndarray:
            return _aug.predict_many(rows)[1]

        scores = objective(X)
        dists = np.min(
            np.linalg.norm(X[:, None, :] - taken[None, :, :], axis=2), axis=1
        )
        scores = np.where(dists < _MIN_SEPARATION, -np.inf, scores)
        best_idx = int(np.argmax(scores))
        alpha, aux, final = _refine(
            objective,
            prior,
            aux_bounds,
            alphas[best_idx],
            auxes[best_idx],
            int(modes[best_idx]),
            cfg.refine_steps,
            rng,
            reject_near=taken,
        )
        if diagnostics is not None:
            diagnostics["pool_best"].append(float(scores[best_idx]))
            diagnostics["final"].append(float(final))
        point = DesignPoint(tuple(alpha), tuple(aux))
        assert is_feasible(prior, point.alpha, tol=1e-9)
        chosen.append(point)
    return chosen


def _rows_from_surrogate(
    surrogate: GpSurrogate, order: int, aux_bounds: Sequence[tuple[float, float]]
) -> np.ndarray:
    """Recover raw input rows from the surrogate's normalised cache."""
    X = surrogate.X.copy()
    for j, (lo, hi) in enumerate(aux_bounds):
        X[:, surrogate.n_alpha + j] = lo + X[:, surrogate.n_alpha + j] * (hi - lo)
    return X
