"""Bernstein-basis mathematics on the unit interval.

A control function g(t) on [0, 1] is represented as a weighted sum of
Bernstein basis polynomials, g(t) = sum_v coeffs[v] * b(v, n, t).  This
module provides evaluation, differentiation, a cheap derivative bound,
exact order elevation, and the translation of declarative shape priors
(increasing / decreasing / unimodal) into linear inequality constraints
on the coefficient vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, DomainError


def binomial(n: int, v: int) -> float:
    """C(n, v) via the multiplicative recurrence, in floating point."""
    if v < 0 or v > n:
        return 0.0
    v = min(v, n - v)
    out = 1.0
    for i in range(v):
        out = out * (n - i) / (i + 1)
    return out


def _check_unit_interval(t: float) -> None:
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"t={t!r} outside [0, 1]")


def basis_eval(n: int, v: int, t: float) -> float:
    """Evaluate the v-th Bernstein basis polynomial of order n at t.

    b(v, n, t) = C(n, v) * t**v * (1 - t)**(n - v), nonnegative on [0, 1].
    """
    if not 0 <= v <= n:
        raise DomainError(f"basis index v={v} outside 0..{n}")
    _check_unit_interval(t)
    return binomial(n, v) * t**v * (1.0 - t) ** (n - v)


def basis_matrix(n: int, ts: Sequence[float]) -> np.ndarray:
    """Matrix B with B[i, v] = b(v, n, ts[i]); shape (len(ts), n + 1).

    Values of a polynomial with coefficient vector a are then B @ a, which
    is the vectorised form used by the acquisition search and objectives.
    """
    t = np.asarray(ts, dtype=float)
    if t.size and (t.min() < 0.0 or t.max() > 1.0):
        raise DomainError("grid points outside [0, 1]")
    vs = np.arange(n + 1)
    binoms = np.array([binomial(n, int(v)) for v in vs])
    tt = t[:, None]
    return binoms * tt**vs * (1.0 - tt) ** (n - vs)


@dataclass(frozen=True)
class BernsteinPoly:
    """An order-n polynomial in Bernstein form: order plus n+1 coefficients.

    The polynomial's value on [0, 1] always lies within
    [min(coeffs), max(coeffs)]; the optimiser keeps coefficients in [0, 1]
    so the curve itself stays unit-scaled.
    """

    order: int
    coeffs: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.order < 0:
            raise DomainError(f"order must be nonnegative, got {self.order}")
        if len(self.coeffs) != self.order + 1:
            raise DomainError(
                f"expected {self.order + 1} coefficients for order "
                f"{self.order}, got {len(self.coeffs)}"
            )
        if not all(math.isfinite(c) for c in self.coeffs):
            raise DomainError("coefficients must be finite")

    @classmethod
    def from_coeffs(cls, coeffs: Sequence[float]) -> "BernsteinPoly":
        coeffs = tuple(float(c) for c in coeffs)
        return cls(order=len(coeffs) - 1, coeffs=coeffs)


def poly_eval(p: BernsteinPoly, t: float) -> float:
    """Evaluate g(t) = sum_v coeffs[v] * b(v, n, t) at a single t in [0, 1]."""
    _check_unit_interval(t)
    return float(np.dot(basis_matrix(p.order, [t])[0], p.coeffs))


def poly_eval_grid(p: BernsteinPoly, ts: Sequence[float]) -> np.ndarray:
    """Evaluate the polynomial at every point of ``ts``."""
    return basis_matrix(p.order, ts) @ np.asarray(p.coeffs)


def poly_derivative(p: BernsteinPoly) -> BernsteinPoly:
    """Derivative of p, returned as an order n-1 polynomial in the same basis.

    The derivative of an order-n Bernstein polynomial has Bernstein
    coefficients n * (coeffs[v+1] - coeffs[v]).  A constant (order 0) input
    yields the zero polynomial of order 0.
    """
    if p.order == 0:
        return BernsteinPoly(order=0, coeffs=(0.0,))
    a = np.asarray(p.coeffs)
    return BernsteinPoly.from_coeffs(p.order * np.diff(a))


def max_adjacent_difference(coeffs: Sequence[float]) -> float:
    """max_v |coeffs[v+1] - coeffs[v]|; zero for length-1 vectors."""
    a = np.asarray(coeffs, dtype=float)
    if a.size < 2:
        return 0.0
    return float(np.max(np.abs(np.diff(a))))


def derivative_bound(p: BernsteinPoly) -> float:
    """Upper bound on max_t |g'(t)|: order times the max adjacent difference.

    The bound follows from the derivative's Bernstein form, whose
    coefficients are n * (coeffs[v+1] - coeffs[v]) and therefore confine the
    derivative to their min/max envelope.  It is tight for order 1.
    """
    return p.order * max_adjacent_difference(p.coeffs)


def elevate(p: BernsteinPoly) -> BernsteinPoly:
    """Re-express p exactly at order n + 1.

    New coefficients follow the convex recurrence
    c'[v] = (v / (n+1)) * c[v-1] + (1 - v / (n+1)) * c[v], with the
    boundary terms c'[0] = c[0] and c'[n+1] = c[n].  The returned
    polynomial is pointwise identical to the input, and the new
    coefficients stay within [min(coeffs), max(coeffs)], so shape
    feasibility and unit scaling survive elevation.
    """
    n = p.order
    a = np.asarray(p.coeffs)
    padded = np.concatenate(([0.0], a, [0.0]))  # padded[v] = c[v-1]
    v = np.arange(n + 2)
    w = v / (n + 1)
    elevated = w * padded[v] + (1.0 - w) * np.concatenate((a, [a[-1]]))
    return BernsteinPoly.from_coeffs(elevated)


# ---------------------------------------------------------------------------
# Shape priors
# ---------------------------------------------------------------------------


class ShapeKind(str, Enum):
    RANGE_ONLY = "range_only"
    INCREASING = "increasing"
    DECREASING = "decreasing"
    UNIMODAL = "unimodal"


@dataclass(frozen=True)
class ShapePrior:
    """Declarative shape constraint on the control function.

    ``mode_index`` fixes the peak coefficient for unimodal priors.  Leaving
    it unset makes the peak position a discrete variable that the
    acquisition search sweeps over; operations that need a concrete
    constraint set then require ``with_mode``.
    """

    kind: ShapeKind
    mode_index: int | None = None

    def __post_init__(self) -> None:
        if self.kind is not ShapeKind.UNIMODAL and self.mode_index is not None:
            raise ConfigError(f"mode_index only applies to unimodal priors, not {self.kind.value}")
        if self.mode_index is not None and self.mode_index < 1:
            raise ConfigError(f"mode_index must be >= 1, got {self.mode_index}")

    def with_mode(self, mode_index: int) -> "ShapePrior":
        if self.kind is not ShapeKind.UNIMODAL:
            raise ConfigError("with_mode only applies to unimodal priors")
        return ShapePrior(ShapeKind.UNIMODAL, mode_index)

    def min_order(self) -> int:
        """Smallest polynomial order on which this prior is meaningful."""
        if self.kind is ShapeKind.UNIMODAL:
            return 3
        if self.kind is ShapeKind.RANGE_ONLY:
            return 0
        return 1

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind.value}
        if self.mode_index is not None:
            out["mode_index"] = self.mode_index
        return out

    @classmethod
    def from_json(cls, payload: dict) -> "ShapePrior":
        try:
            kind = ShapeKind(payload["kind"])
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"invalid shape prior: {payload!r}") from exc
        return cls(kind, payload.get("mode_index"))


def _check_prior_order(prior: ShapePrior, n: int) -> None:
    if n < prior.min_order():
        raise ConfigError(
            f"{prior.kind.value} prior requires order >= {prior.min_order()}, got {n}"
        )
    if prior.kind is ShapeKind.UNIMODAL and prior.mode_index is not None:
        if not 0 < prior.mode_index < n:
            raise ConfigError(
                f"mode_index must satisfy 0 < l < {n}, got {prior.mode_index}"
            )


def constraint_matrix(prior: ShapePrior, n: int) -> np.ndarray:
    """Rows C such that feasibility is C @ coeffs >= 0 (box bounds separate).

    Increasing/decreasing priors yield n rows of adjacent differences;
    unimodal priors with peak index l yield rising differences up to l and
    falling differences after it, n rows in total.  Range-only priors need
    no rows at all: the [0, 1] box on the coefficients already pins the
    curve's range.
    """
    _check_prior_order(prior, n)
    if prior.kind is ShapeKind.RANGE_ONLY:
        return np.zeros((0, n + 1))
    if prior.kind is ShapeKind.UNIMODAL and prior.mode_index is None:
        raise ConfigError("unimodal prior needs a concrete mode_index here; use with_mode")
    diff = np.zeros((n, n + 1))
    idx = np.arange(n)
    diff[idx, idx] = -1.0
    diff[idx, idx + 1] = 1.0  # row v computes coeffs[v+1] - coeffs[v]
    if prior.kind is ShapeKind.INCREASING:
        return diff
    if prior.kind is ShapeKind.DECREASING:
        return -diff
    rows = diff.copy()
    rows[prior.mode_index :] *= -1.0  # falling flank after the peak
    return rows


def constraint_set(prior: ShapePrior, n: int) -> list[Callable[[Sequence[float]], float]]:
    """The prior's inequality functionals; each must be >= 0 at a feasible vector."""
    rows = constraint_matrix(prior, n)
    return [
        (lambda coeffs, r=row: float(np.dot(r, np.asarray(coeffs, dtype=float))))
        for row in rows
    ]


def is_feasible(prior: ShapePrior, coeffs: Sequence[float], tol: float = 1e-12) -> bool:
    """Whether ``coeffs`` satisfies the prior's inequalities within ``tol``.

    For an unimodal prior without a fixed mode index, any admissible peak
    position makes the vector feasible.
    """
    a = np.asarray(coeffs, dtype=float)
    n = a.size - 1
    if prior.kind is ShapeKind.UNIMODAL and prior.mode_index is None:
        return any(
            is_feasible(prior.with_mode(l), coeffs, tol) for l in range(1, n)
        )
    rows = constraint_matrix(prior, n)
    if rows.size == 0:
        return True
    return bool(np.all(rows @ a >= -tol))


def sample_feasible(
    prior: ShapePrior,
    n: int,
    rng_seed: int | np.random.Generator,
    count: int,
) -> np.ndarray:
    """Draw ``count`` coefficient vectors in [0, 1]^(n+1) satisfying the prior.

    Range-only vectors are plain uniforms; monotone vectors are sorted
    uniforms; unimodal vectors place the largest draw at the mode index and
    fan the remaining draws outwards, keeping each flank monotone.  The
    result is deterministic for a fixed seed.
    """
    if count < 1:
        raise ConfigError(f"count must be >= 1, got {count}")
    _check_prior_order(prior, n)
    rng = np.random.default_rng(rng_seed)
    draws = rng.random((count, n + 1))
    if prior.kind is ShapeKind.RANGE_ONLY:
        return draws
    if prior.kind is ShapeKind.INCREASING:
        return np.sort(draws, axis=1)
    if prior.kind is ShapeKind.DECREASING:
        return np.sort(draws, axis=1)[:, ::-1]
    if prior.mode_index is None:
        raise ConfigError("unimodal prior needs a concrete mode_index here; use with_mode")
    l = prior.mode_index
    out = np.empty_like(draws)
    for i in range(count):
        row = np.sort(draws[i])[::-1]
        left = rng.permutation(n)[:l]  # which of the non-peak draws go left
        mask = np.zeros(n, dtype=bool)
        mask[left] = True
        out[i, l] = row[0]
        out[i, :l] = np.sort(row[1:][mask])
        out[i, l + 1 :] = np.sort(row[1:][~mask])[::-1]
    return out


def project_feasible(
    prior: ShapePrior, coeffs: np.ndarray, mode_index: int | None = None
) -> np.ndarray:
    """Map an arbitrary vector to a nearby prior-feasible one.

    Used by the acquisition refinement to repair perturbed candidates: box
    clamping plus re-sorting for monotone priors; for unimodal priors the
    largest entry is swapped to the peak position and each flank re-sorted.
    """
    a = np.clip(np.asarray(coeffs, dtype=float), 0.0, 1.0)
    if prior.kind is ShapeKind.RANGE_ONLY:
        return a
    if prior.kind is ShapeKind.INCREASING:
        return np.sort(a)
    if prior.kind is ShapeKind.DECREASING:
        return np.sort(a)[::-1]
    l = mode_index if mode_index is not None else prior.mode_index
    if l is None:
        raise ConfigError("unimodal projection needs a mode index")
    a = a.copy()
    top = int(np.argmax(a))
    a[top], a[l] = a[l], a[top]
    a[:l] = np.sort(a[:l])
    a[l + 1 :] = np.sort(a[l + 1 :])[::-1]
    return a


# ---------------------------------------------------------------------------
# Sampled curves and rescaling to application units
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CurveSample:
    """A control function sampled on a strictly increasing grid in [0, 1]."""

    grid: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.grid) != len(self.values):
            raise DomainError("grid and values must have equal length")
        g = np.asarray(self.grid)
        if g.size and (g[0] < 0.0 or g[-1] > 1.0):
            raise DomainError("grid endpoints must lie within [0, 1]")
        if g.size > 1 and not np.all(np.diff(g) > 0):
            raise DomainError("grid must be strictly increasing")

    def to_json(self) -> dict:
        return {"grid": list(self.grid), "values": list(self.values)}

    @classmethod
    def from_json(cls, payload: dict) -> "CurveSample":
        try:
            return cls(tuple(payload["grid"]), tuple(payload["values"]))
        except (KeyError, TypeError) as exc:
            raise DomainError(f"invalid curve payload: {payload!r}") from exc


def sample_curve(p: BernsteinPoly, grid_size: int = 101) -> CurveSample:
    """Sample the polynomial on a uniform grid of ``grid_size`` points."""
    if grid_size < 2:
        raise DomainError(f"grid_size must be >= 2, got {grid_size}")
    ts = np.linspace(0.0, 1.0, grid_size)
    return CurveSample(tuple(ts), tuple(poly_eval_grid(p, ts)))


@dataclass(frozen=True)
class RescaleRecord:
    """Affine map from the unit-scaled representation to application units.

    Time t in [0, 1] maps to [t_min, t_max]; unit-scaled values map to
    [y_min, y_max] (butanol flow, learning rate, ...).  The identity record
    keeps everything on the unit square.
    """

    t_min: float = 0.0
    t_max: float = 1.0
    y_min: float = 0.0
    y_max: float = 1.0

    def __post_init__(self) -> None:
        if not (self.t_max > self.t_min and self.y_max > self.y_min):
            raise ConfigError("rescale ranges must have positive width")

    def apply(self, sample: CurveSample) -> dict:
        """Rescale a unit-square curve; returns plain JSON (grid may leave [0,1])."""
        g = np.asarray(sample.grid)
        v = np.asarray(sample.values)
        return {
            "grid": list(self.t_min + g * (self.t_max - self.t_min)),
            "values": list(self.y_min + v * (self.y_max - self.y_min)),
        }

    def to_json(self) -> dict:
        return {
            "t_min": self.t_min,
            "t_max": self.t_max,
            "y_min": self.y_min,
            "y_max": self.y_max,
        }

    @classmethod
    def from_json(cls, payload: dict) -> "RescaleRecord":
        try:
            return cls(**{k: float(payload[k]) for k in ("t_min", "t_max", "y_min", "y_max")})
        except KeyError as exc:
            raise ConfigError(f"invalid rescale record: {payload!r}") from exc
