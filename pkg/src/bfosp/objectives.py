"""Benchmark objectives and the external-evaluation exchange format.

The built-in benchmarks score a candidate control function by sampling it
on a fixed 10-point grid and passing the squared distance to a target
vector through a Gaussian similarity kernel, so utility lives in (0, 1]
and peaks exactly when the sampled curve matches the target.  Expensive
real-world objectives (a fibre apparatus, a network training run) instead
go through the request/response JSON protocol at the bottom.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from typing import Callable, Sequence

import numpy as np

from .bernstein import BernsteinPoly, CurveSample, basis_matrix
from .errors import ConfigError, ProtocolError

# Candidate curves are sampled at the midpoints of ten equal bins.
EVALUATION_GRID = tuple((i + 0.5) / 10 for i in range(10))

_SHAPES = ("decreasing", "unimodal")


def _is_weakly_decreasing(v: np.ndarray) -> bool:
    return bool(np.all(np.diff(v) <= 1e-12))


def _is_weakly_unimodal(v: np.ndarray) -> bool:
    d = np.diff(v)
    falling = False
    for step in d:
        if step < -1e-12:
            falling = True
        elif step > 1e-12 and falling:
            return False
    return True


@dataclass(frozen=True)
class SyntheticTarget:
    """A target schedule vector on the fixed grid, with its declared shape."""

    shape: str
    target_vector: tuple[float, ...]
    spread: float = 0.5

    def __post_init__(self) -> None:
        if self.shape not in _SHAPES:
            raise ConfigError(f"shape must be one of {_SHAPES}, got {self.shape!r}")
        if len(self.target_vector) != len(EVALUATION_GRID):
            raise ConfigError(
                f"target vector must have {len(EVALUATION_GRID)} entries"
            )
        if self.spread <= 0:
            raise ConfigError("spread must be positive")
        v = np.asarray(self.target_vector)
        if self.shape == "decreasing" and not _is_weakly_decreasing(v):
            raise ConfigError("decreasing target is not monotone on the grid")
        if self.shape == "unimodal" and not _is_weakly_unimodal(v):
            raise ConfigError("unimodal target is not single-peaked on the grid")


def default_target(shape: str) -> SyntheticTarget:
    """The bundled benchmark target for ``shape`` (overridable via config)."""
    payload = json.loads(
        resources.files("bfosp").joinpath("data/targets.json").read_text()
    )
    if shape not in payload:
        raise ConfigError(f"no bundled target for shape {shape!r}")
    entry = payload[shape]
    return SyntheticTarget(
        shape=shape,
        target_vector=tuple(entry["values"]),
        spread=float(entry["spread"]),
    )


def utility_from_values(target: SyntheticTarget, sampled: Sequence[float]) -> float:
    """exp(-||sampled - target||^2 / (2 * spread^2)), in (0, 1]."""
    s = np.asarray(sampled, dtype=float)
    if s.shape != (len(EVALUATION_GRID),):
        raise ConfigError(f"expected {len(EVALUATION_GRID)} sampled values")
    sq = float(np.sum((s - np.asarray(target.target_vector)) ** 2))
    return float(np.exp(-sq / (2.0 * target.spread**2)))


def synthetic_utility(target: SyntheticTarget, candidate: BernsteinPoly) -> float:
    """Utility of a candidate control function against the target."""
    sampled = basis_matrix(candidate.order, EVALUATION_GRID) @ np.asarray(
        candidate.coeffs
    )
    return utility_from_values(target, sampled)


# ---------------------------------------------------------------------------
# External objective protocol
# ---------------------------------------------------------------------------
#
# Request:  {"token": str, "curve": {"grid": [...], "values": [...]}, "aux": [...]}
# Response: {"token": str, "y": float}
#
# The campaign issues one request per pending suggestion; evaluation happens
# outside the process (an experimenter, a training job) and the score comes
# back through tell keyed on the token.


def evaluation_request(token: str, curve: CurveSample | dict, aux: Sequence[float]) -> dict:
    curve_json = curve.to_json() if isinstance(curve, CurveSample) else dict(curve)
    return {"token": token, "curve": curve_json, "aux": list(aux)}


def parse_evaluation_response(payload: dict) -> tuple[str, float]:
    """Validate a response document and extract (token, y)."""
    try:
        token = payload["token"]
        y = float(payload["y"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ProtocolError(f"malformed evaluation response: {payload!r}") from exc
    if not isinstance(token, str) or not token:
        raise ProtocolError(f"malformed evaluation response: {payload!r}")
    if not np.isfinite(y):
        raise ProtocolError(f"evaluation response carries non-finite y: {y!r}")
    return token, y


@dataclass
class ScriptedObjective:
    """Answers evaluation requests with a plain function; test/demo stand-in
    for an external experimenter or training pipeline."""

    fn: Callable[[CurveSample, Sequence[float]], float]

    def __call__(self, request: dict) -> dict:
        curve = CurveSample.from_json(request["curve"])
        y = self.fn(curve, request.get("aux", ()))
        return {"token": request["token"], "y": float(y)}
