"""Feature attribution game for a linear regression model.

Features are players. The payoff of a coalition is the R^2 score of a fixed,
already fitted linear model when every feature outside the coalition is
replaced by a baseline value (zero by default).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .coalition import Coalition, check_exact
from .errors import DomainError, SingularFitError
from .game import BernoulliOffsetNoise, DeterministicGame, GaussianNoise, NoiseModel

BERNOULLI_P = 0.33
BERNOULLI_C = 0.05
GAUSSIAN_SIGMA = 0.01

_ROWS_PER_BLOCK = 256


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray  # (K, d)
    targets: np.ndarray  # (K,)
    coef: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        X = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.targets, dtype=np.float64)
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
            raise DomainError(f"incompatible shapes {X.shape} and {y.shape}")
        if X.shape[0] < 2 or X.shape[1] < 1:
            raise DomainError("need at least two points and one feature")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise DomainError("dataset contains non-finite entries")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "targets", y)

    @property
    def num_points(self) -> int:
        return self.features.shape[0]

    @property
    def num_features(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray
    intercept: float

    def predict(self, X: np.ndarray) -> np.ndarray:
        return X @ self.weights + self.intercept


def generate_regression(num_points: int, num_features: int, noise_level: float = 0.1, seed: int = 0) -> Dataset:
    """Synthetic linear data with every feature informative.

    Features are standard normal, the true coefficients are uniform on
    ``(0, 100]`` and the targets get additive normal noise of scale
    ``noise_level``.
    """
    if num_points < 2 or num_features < 1:
        raise DomainError(f"degenerate size {num_points} x {num_features}")
    if noise_level < 0:
        raise DomainError("noise level must be non-negative")
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((num_points, num_features))
    coef = 100.0 * (1.0 - rng.random(num_features))
    y = X @ coef
    if noise_level > 0:
        y = y + noise_level * rng.standard_normal(num_points)
    return Dataset(X, y, coef)


def fit_linear_regression(dataset: Dataset) -> LinearModel:
    """Ordinary least squares with an intercept, solved by QR."""
    X, y = dataset.features, dataset.targets
    K, d = X.shape
    if d >= K:
        raise SingularFitError(f"{d} features but only {K} points")
    # Centering separates the intercept and improves conditioning.
    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    Xc = X - x_mean
    q, r = np.linalg.qr(Xc)
    diag = np.abs(np.diag(r))
    if diag.max() == 0.0 or diag.min() <= 1e-10 * diag.max():
        raise SingularFitError("design matrix is rank deficient")
    theta = np.linalg.solve(r, q.T @ (y - y_mean))
    return LinearModel(theta, float(y_mean - x_mean @ theta))


def r2_score(model: LinearModel, dataset: Dataset) -> float:
    y = dataset.targets
    sst = float(np.sum((y - y.mean()) ** 2))
    if sst <= 0.0:
        raise DomainError("targets have zero variance")
    resid = y - model.predict(dataset.features)
    return 1.0 - float(resid @ resid) / sst


class ZeroImputedR2:
    """Callable value function ``S -> R^2`` with features outside ``S`` set to the baseline.

    ``table(n)`` evaluates all coalitions in blocks of masked matrix products;
    a single call evaluates one coalition with the same arithmetic.
    """

    def __init__(self, model: LinearModel, dataset: Dataset, baseline: Optional[np.ndarray] = None) -> None:
        d = dataset.num_features
        if model.weights.shape != (d,):
            raise DomainError(f"model has {model.weights.shape[0]} weights, dataset {d} features")
        base = np.zeros(d) if baseline is None else np.asarray(baseline, dtype=np.float64)
        if base.shape != (d,):
            raise DomainError("baseline length does not match feature count")
        y = dataset.targets
        self.n = d
        self._sst = float(np.sum((y - y.mean()) ** 2))
        if self._sst <= 0.0:
            raise DomainError("targets have zero variance")
        # prediction(S) = intercept + theta.base + sum_{j in S} theta_j (x_j - base_j)
        self._contrib = (dataset.features - base) * model.weights
        self._offset = y - (model.intercept + float(model.weights @ base))

    def _values(self, bits: np.ndarray) -> np.ndarray:
        masks = ((bits[:, None] >> np.arange(self.n)[None, :]) & 1).astype(np.float64)
        resid = self._offset[None, :] - masks @ self._contrib.T
        return 1.0 - np.einsum("ij,ij->i", resid, resid) / self._sst

    def __call__(self, S: Coalition) -> float:
        return float(self._values(np.array([S.bits]))[0])

    def table(self, n: int) -> np.ndarray:
        if n != self.n:
            raise DomainError(f"value function has {self.n} players, asked for {n}")
        check_exact(n)
        size = 1 << n
        out = np.empty(size)
        for lo in range(0, size, _ROWS_PER_BLOCK):
            bits = np.arange(lo, min(lo + _ROWS_PER_BLOCK, size))
            out[bits] = self._values(bits)
        return out


def zero_imputed_vf(model: LinearModel, dataset: Dataset, baseline: Optional[np.ndarray] = None) -> DeterministicGame:
    """Game over the features whose payoff is the masked-input R^2 score."""
    vf = ZeroImputedR2(model, dataset, baseline)
    return DeterministicGame.from_function(vf.n, vf)


def reference_noise(kind: str) -> NoiseModel:
    """The two reference noises: bernoulli offset (p=0.33, c=0.05) or gaussian (sigma=0.01)."""
    if kind == "bernoulli":
        return BernoulliOffsetNoise(BERNOULLI_P, BERNOULLI_C)
    if kind == "gaussian":
        return GaussianNoise(GAUSSIAN_SIGMA)
    raise DomainError(f"unknown noise kind {kind!r}")
