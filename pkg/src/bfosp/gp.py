"""Gaussian-process surrogate over design points.

Exact inference with a squared-exponential kernel: the posterior mean is
k^T (K + noise*I)^-1 y and the posterior variance k(x,x) minus the
corresponding quadratic form, both computed through a cached Cholesky
factorisation.  Inputs are normalised to the unit box (coefficients
already are; auxiliary variables via their bounds) and outputs can be
standardised so the zero-mean prior holds by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import cholesky, solve_triangular

from .errors import DomainError, NumericalError

DEFAULT_LENGTHSCALE = 0.2
DEFAULT_SIGNAL_VARIANCE = 1.0
DEFAULT_NOISE_VARIANCE = 1e-4

LENGTHSCALE_GRID = (0.05, 0.1, 0.2, 0.5, 1.0)
SIGNAL_VARIANCE_GRID = (0.25, 1.0, 4.0)
NOISE_VARIANCE_GRID = (1e-6, 1e-4, 1e-2)

_JITTER_START = 1e-10
_JITTER_DOUBLINGS = 10


@dataclass(frozen=True)
class DesignPoint:
    """One optimiser input: coefficient vector plus auxiliary control values."""

    alpha: tuple[float, ...]
    aux: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if not all(math.isfinite(a) for a in self.alpha + self.aux):
            raise DomainError("design point entries must be finite")
        if not self.alpha:
            raise DomainError("design point needs at least one coefficient")

    @property
    def dim(self) -> int:
        return len(self.alpha) + len(self.aux)

    def vector(self) -> np.ndarray:
        return np.asarray(self.alpha + self.aux, dtype=float)

    def to_json(self) -> dict:
        return {"alpha": list(self.alpha), "aux": list(self.aux)}

    @classmethod
    def from_json(cls, payload: dict) -> "DesignPoint":
        return cls(tuple(payload["alpha"]), tuple(payload.get("aux", ())))


@dataclass(frozen=True)
class Observation:
    """A design point together with its observed outcome."""

    point: DesignPoint
    value: float
    batch_id: int = 0
    iteration: int = 0

    def __post_init__(self) -> None:
        if not math.isfinite(self.value):
            raise DomainError(f"observed value must be finite, got {self.value!r}")

    def to_json(self) -> dict:
        return {
            "alpha": list(self.point.alpha),
            "aux": list(self.point.aux),
            "y": self.value,
            "batch_id": self.batch_id,
            "iteration": self.iteration,
        }

    @classmethod
    def from_json(cls, payload: dict) -> "Observation":
        return cls(
            point=DesignPoint(tuple(payload["alpha"]), tuple(payload.get("aux", ()))),
            value=float(payload["y"]),
            batch_id=int(payload.get("batch_id", 0)),
            iteration=int(payload.get("iteration", 0)),
        )


@dataclass(frozen=True)
class KernelParams:
    """Squared-exponential kernel hyperparameters plus observation noise."""

    signal_variance: float = DEFAULT_SIGNAL_VARIANCE
    lengthscales: tuple[float, ...] = (DEFAULT_LENGTHSCALE,)
    noise_variance: float = DEFAULT_NOISE_VARIANCE

    def __post_init__(self) -> None:
        if self.signal_variance <= 0 or self.noise_variance < 0:
            raise DomainError("variances must be positive (noise may be zero)")
        if any(l <= 0 for l in self.lengthscales):
            raise DomainError("lengthscales must be positive")

    @classmethod
    def defaults_for_dim(cls, dim: int) -> "KernelParams":
        return cls(lengthscales=(DEFAULT_LENGTHSCALE,) * dim)


def _normalize_rows(
    X: np.ndarray, n_alpha: int, aux_bounds: Sequence[tuple[float, float]]
) -> np.ndarray:
    """Map raw [alpha, aux] rows into the unit box using the aux bounds."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if not aux_bounds:
        return X
    out = X.copy()
    for j, (lo, hi) in enumerate(aux_bounds):
        out[:, n_alpha + j] = (X[:, n_alpha + j] - lo) / (hi - lo)
    return out


def _se_cross(A: np.ndarray, B: np.ndarray, params: KernelParams) -> np.ndarray:
    ls = np.asarray(params.lengthscales)
    d = A[:, None, :] - B[None, :, :]
    sq = np.sum((d / ls) ** 2, axis=2)
    return params.signal_variance * np.exp(-0.5 * sq)


def kernel_eval(
    a: DesignPoint,
    b: DesignPoint,
    params: KernelParams,
    aux_bounds: Sequence[tuple[float, float]] = (),
) -> float:
    """SE kernel between two design points (aux normalised when bounds given)."""
    if a.dim != b.dim:
        raise DomainError(f"dimension mismatch: {a.dim} vs {b.dim}")
    if len(params.lengthscales) != a.dim:
        raise DomainError("lengthscale vector does not match point dimension")
    A = _normalize_rows(a.vector()[None, :], len(a.alpha), aux_bounds)
    B = _normalize_rows(b.vector()[None, :], len(b.alpha), aux_bounds)
    return float(_se_cross(A, B, params)[0, 0])


def _chol_with_jitter(K: np.ndarray) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor of K, adding doubling diagonal jitter on failure."""
    jitter = 0.0
    for attempt in range(_JITTER_DOUBLINGS + 2):
        try:
            L = cholesky(K + jitter * np.eye(K.shape[0]), lower=True)
            return L, jitter
        except np.linalg.LinAlgError:
            jitter = _JITTER_START if jitter == 0.0 else jitter * 2.0
    raise NumericalError(
        f"kernel matrix not positive definite after jitter {jitter / 2.0:g}"
    )


@dataclass(frozen=True)
class GpSurrogate:
    """A fitted surrogate: immutable, safe to share across threads.

    Prediction de-standardises internally, so callers always see outputs on
    the original scale of the training data.
    """

    params: KernelParams
    n_alpha: int
    aux_bounds: tuple[tuple[float, float], ...]
    X: np.ndarray  # normalised inputs, shape (m, dim)
    y_mean: float
    y_std: float
    L: np.ndarray = field(repr=False)  # lower Cholesky of K + noise*I
    weights: np.ndarray = field(repr=False)  # (K + noise*I)^-1 y_standardised
    jitter: float = 0.0

    @property
    def n_data(self) -> int:
        return self.X.shape[0]

    def predict_many(self, X_raw: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and variance at each row of ``X_raw``.

        Variance is the latent-function variance, clamped to
        [0, signal_variance + noise_variance] against round-off.
        """
        X_raw = np.atleast_2d(np.asarray(X_raw, dtype=float))
        if X_raw.shape[1] != self.X.shape[1]:
            raise DomainError(
                f"dimension mismatch: {X_raw.shape[1]} vs {self.X.shape[1]}"
            )
        Xn = _normalize_rows(X_raw, self.n_alpha, self.aux_bounds)
        Kx = _se_cross(Xn, self.X, self.params)  # (q, m)
        mean_std = Kx @ self.weights
        V = solve_triangular(self.L, Kx.T, lower=True)  # (m, q)
        var = self.params.signal_variance - np.sum(V * V, axis=0)
        var = np.clip(var, 0.0, self.params.signal_variance + self.params.noise_variance)
        return self.y_mean + self.y_std * mean_std, var * self.y_std**2

    def predict(self, x: DesignPoint) -> tuple[float, float]:
        mean, var = self.predict_many(x.vector()[None, :])
        return float(mean[0]), float(var[0])


def fit(
    data: Sequence[Observation],
    params: KernelParams | None = None,
    aux_bounds: Sequence[tuple[float, float]] = (),
    standardize: bool = True,
) -> GpSurrogate:
    """Fit an exact GP to the observations.

    ``standardize`` rescales outputs to zero mean / unit variance before
    inference (the campaign loop always does); turn it off to work on the
    raw outputs, e.g. when hyperparameters are stated for the raw scale.
    """
    if not data:
        raise DomainError("fit requires at least one observation")
    dims = {obs.point.dim for obs in data}
    n_alphas = {len(obs.point.alpha) for obs in data}
    if len(dims) != 1 or len(n_alphas) != 1:
        raise DomainError(f"observations mix dimensions: {sorted(dims)}")
    dim = dims.pop()
    n_alpha = n_alphas.pop()
    if params is None:
        params = KernelParams.defaults_for_dim(dim)
    if len(params.lengthscales) != dim:
        raise DomainError("lengthscale vector does not match data dimension")

    X_raw = np.vstack([obs.point.vector() for obs in data])
    y = np.array([obs.value for obs in data])
    if standardize:
        y_mean = float(np.mean(y))
        std = float(np.std(y))
        y_std_scale = std if std > 1e-12 else 1.0
    else:
        y_mean, y_std_scale = 0.0, 1.0
    y_s = (y - y_mean) / y_std_scale

    Xn = _normalize_rows(X_raw, n_alpha, aux_bounds)
    K = _se_cross(Xn, Xn, params) + params.noise_variance * np.eye(len(data))
    L, jitter = _chol_with_jitter(K)
    weights = solve_triangular(
        L, solve_triangular(L, y_s, lower=True), lower=True, trans="T"
    )
    return GpSurrogate(
        params=params,
        n_alpha=n_alpha,
        aux_bounds=tuple(tuple(b) for b in aux_bounds),
        X=Xn,
        y_mean=y_mean,
        y_std=y_std_scale,
        L=L,
        weights=weights,
        jitter=jitter,
    )


def select_hyperparameters(
    data: Sequence[Observation],
    aux_bounds: Sequence[tuple[float, float]] = (),
) -> KernelParams:
    """Pick kernel hyperparameters by log marginal likelihood on a fixed grid.

    The grid is isotropic in the lengthscale and stated relative to the
    standardised output scale; with fewer than three observations the
    defaults are returned unchanged.  Ties resolve to the earliest grid
    entry, so the choice is deterministic.
    """
    if not data:
        return KernelParams()
    dim = data[0].point.dim
    if len(data) < 3:
        return KernelParams.defaults_for_dim(dim)

    X_raw = np.vstack([obs.point.vector() for obs in data])
    y = np.array([obs.value for obs in data])
    y_mean = float(np.mean(y))
    std = float(np.std(y))
    y_s = (y - y_mean) / (std if std > 1e-12 else 1.0)
    Xn = _normalize_rows(X_raw, len(data[0].point.alpha), aux_bounds)

    m = len(data)
    best: tuple[float, KernelParams] | None = None
    for ls in LENGTHSCALE_GRID:
        for sv in SIGNAL_VARIANCE_GRID:
            for nv in NOISE_VARIANCE_GRID:
                params = KernelParams(sv, (ls,) * dim, nv)
                K = _se_cross(Xn, Xn, params) + nv * np.eye(m)
                try:
                    L, _ = _chol_with_jitter(K)
                except NumericalError:
                    continue
                w = solve_triangular(
                    L, solve_triangular(L, y_s, lower=True), lower=True, trans="T"
                )
                lml = (
                    -0.5 * float(np.dot(y_s, w))
                    - float(np.sum(np.log(np.diag(L))))
                    - 0.5 * m * math.log(2.0 * math.pi)
                )
                if best is None or lml > best[0]:
                    best = (lml, params)
    return best[1] if best is not None else KernelParams.defaults_for_dim(dim)
