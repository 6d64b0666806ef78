"""Shapley values of games with noisy payoffs.

With noise, the marginal contribution of player ``i`` at ``S`` becomes
``v(S + i) - v(S) + eps_i(S)`` where ``eps_i(S) = noise(S + i) - noise(S)``.
Everything here is analytic: it only needs the noise model's moments.

The uncertain Shapley value is ``phi + gamma`` where ``gamma`` is the
``w``-weighted mean of ``E[eps_i | S]``, and it coincides with the ordinary
Shapley value of the deterministic game ``v(S) + sum(gamma_j for j in S)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.stats import norm

from .coalition import check_exact
from .errors import DomainError, UnsupportedAnalyticsError
from .game import (
    BernoulliOffsetNoise,
    DeterministicGame,
    GaussianNoise,
    NoNoise,
    UncertainGame,
    epsilon_moment_table,
)
from .shapley_exact import PlayerTerms, merge_atoms, player_terms, weighted_sum

GRID_POINTS = 1024
GRID_HALF_WIDTH_SDS = 8.0


@dataclass(frozen=True)
class UncertainShapleyResult:
    """Per-player arrays; entry ``k`` belongs to player ``k + 1``.

    ``sigma2_total == sigma2_intrinsic + sigma2_gamma + xi``.
    """

    phi: np.ndarray
    gamma: np.ndarray
    phi_tilde: np.ndarray
    sigma2_intrinsic: np.ndarray
    sigma2_gamma: np.ndarray
    xi: np.ndarray
    sigma2_total: np.ndarray

    FIELDS = ("phi", "gamma", "phi_tilde", "sigma2_intrinsic", "sigma2_gamma", "xi", "sigma2_total")

    @property
    def n(self) -> int:
        return len(self.phi)

    def row(self, i: int) -> dict:
        return {f: float(getattr(self, f)[i - 1]) for f in self.FIELDS}


@dataclass(frozen=True)
class VarianceDecomposition:
    sigma2_intrinsic: float
    sigma2_gamma: float
    xi: float
    sigma2_total: float

    def __iter__(self):
        return iter((self.sigma2_intrinsic, self.sigma2_gamma, self.xi, self.sigma2_total))


@dataclass(frozen=True)
class MixtureDensity:
    """Distribution of a player's noisy marginal contribution.

    ``kind == "discrete"``: ``values``/``masses`` are merged atoms.
    ``kind == "continuous"``: ``values`` is the grid and ``density`` the
    density on it; ``components`` lists ``(center, weight, std)`` of the
    normal mixture.
    """

    player: int
    kind: str
    values: np.ndarray
    masses: Optional[np.ndarray] = None
    density: Optional[np.ndarray] = None
    components: tuple = ()

    def total_mass(self) -> float:
        if self.kind == "discrete":
            return math.fsum(self.masses)
        return float(np.trapezoid(self.density, self.values))

    def moment(self, k: int) -> float:
        if self.kind == "discrete":
            return math.fsum(self.masses * self.values**k)
        return float(np.trapezoid(self.density * self.values**k, self.values))

    def mean(self) -> float:
        return self.moment(1)

    def variance(self) -> float:
        return self.moment(2) - self.mean() ** 2


def _setup(ugame: UncertainGame) -> np.ndarray:
    check_exact(ugame.n)
    return ugame.base.table()


def _check_player(ugame: UncertainGame, i: int) -> None:
    if not 1 <= i <= ugame.n:
        raise DomainError(f"player index {i} outside 1..{ugame.n}")


def _eps(ugame: UncertainGame, i: int, k: int, t: PlayerTerms) -> np.ndarray:
    """``E[eps_i**k | S]`` aligned with ``t.bits``."""
    return epsilon_moment_table(ugame.noise, ugame.n, i, k)[t.bits]


def gamma(ugame: UncertainGame, i: int) -> float:
    """Mean bias: weighted average over ``S`` of ``E[noise(S + i)] - E[noise(S)]``."""
    _check_player(ugame, i)
    t = player_terms(_setup(ugame), ugame.n, i)
    return weighted_sum(t.weights, _eps(ugame, i, 1, t))


def gammas(ugame: UncertainGame) -> np.ndarray:
    return np.array([gamma(ugame, i) for i in range(1, ugame.n + 1)])


def uncertain_moment(ugame: UncertainGame, i: int, k: int) -> float:
    """``k``-th raw moment of the noisy marginal contribution of player ``i``."""
    if k < 1:
        raise DomainError(f"moment order must be >= 1, got {k}")
    _check_player(ugame, i)
    t = player_terms(_setup(ugame), ugame.n, i)
    return _uncertain_moment(ugame, i, k, t)


def _uncertain_moment(ugame: UncertainGame, i: int, k: int, t: PlayerTerms) -> float:
    parts = [
        math.comb(k, j) * t.weights * t.deltas**j * _eps(ugame, i, k - j, t) for j in range(k + 1)
    ]
    return math.fsum(np.concatenate(parts))


def _decompose(ugame: UncertainGame, i: int, t: PlayerTerms):
    e1 = _eps(ugame, i, 1, t)
    e2 = _eps(ugame, i, 2, t)
    phi = weighted_sum(t.weights, t.deltas)
    m2 = weighted_sum(t.weights, t.deltas**2)
    g = weighted_sum(t.weights, e1)
    intrinsic = max(m2 - phi * phi, 0.0)
    noise_var = max(weighted_sum(t.weights, e2) - g * g, 0.0)
    xi = 2.0 * weighted_sum(t.weights, t.deltas * e1) - 2.0 * phi * g
    return phi, g, intrinsic, noise_var, xi


def variance_decomposition(ugame: UncertainGame, i: int) -> VarianceDecomposition:
    """Split the variance of the noisy marginal contribution.

    Returns the intrinsic variance of the noiseless contributions, the noise
    variance ``E[eps**2] - gamma**2``, the correlation term ``xi`` and their sum.
    """
    _check_player(ugame, i)
    t = player_terms(_setup(ugame), ugame.n, i)
    _, _, intrinsic, noise_var, xi = _decompose(ugame, i, t)
    return VarianceDecomposition(intrinsic, noise_var, xi, intrinsic + noise_var + xi)


def uncertain_shapley(ugame: UncertainGame) -> UncertainShapleyResult:
    table = _setup(ugame)
    cols = {f: np.empty(ugame.n) for f in UncertainShapleyResult.FIELDS}
    for i in range(1, ugame.n + 1):
        t = player_terms(table, ugame.n, i)
        phi, g, intrinsic, noise_var, xi = _decompose(ugame, i, t)
        k = i - 1
        cols["phi"][k] = phi
        cols["gamma"][k] = g
        cols["phi_tilde"][k] = phi + g
        cols["sigma2_intrinsic"][k] = intrinsic
        cols["sigma2_gamma"][k] = noise_var
        cols["xi"][k] = xi
        cols["sigma2_total"][k] = intrinsic + noise_var + xi
    return UncertainShapleyResult(**cols)


def shifted_game(ugame: UncertainGame) -> DeterministicGame:
    """Deterministic game whose Shapley values equal the uncertain ones.

    Its payoff is ``v(S) + sum(gamma_j for j in S)``.
    """
    table = _setup(ugame)
    g = gammas(ugame)
    n = ugame.n
    idx = np.arange(1 << n)
    shift = np.zeros(1 << n)
    for j in range(n):
        shift += ((idx >> j) & 1) * g[j]
    return DeterministicGame(n, table + shift)


def default_grid(ugame: UncertainGame, i: int, points: int = GRID_POINTS) -> np.ndarray:
    """Evenly spaced grid covering every component out to eight standard deviations."""
    if not isinstance(ugame.noise, GaussianNoise):
        raise DomainError("a default grid is only defined for gaussian noise")
    t = player_terms(_setup(ugame), ugame.n, i)
    sd = math.sqrt(2.0) * ugame.noise.sigma
    lo = float(t.deltas.min()) - GRID_HALF_WIDTH_SDS * sd
    hi = float(t.deltas.max()) + GRID_HALF_WIDTH_SDS * sd
    return np.linspace(lo, hi, points)


def mixture_density(
    ugame: UncertainGame, i: int, grid: Optional[Sequence[float]] = None
) -> MixtureDensity:
    """Law of the noisy marginal contribution of player ``i``.

    Supported for no noise and bernoulli offsets (discrete atoms) and gaussian
    noise (a normal mixture evaluated on ``grid``).
    """
    _check_player(ugame, i)
    noise = ugame.noise
    t = player_terms(_setup(ugame), ugame.n, i)
    if isinstance(noise, NoNoise):
        values, masses = merge_atoms(t.deltas, t.weights)
        return MixtureDensity(i, "discrete", values, masses=masses)
    if isinstance(noise, BernoulliOffsetNoise):
        q = noise.p * (1.0 - noise.p)
        c = noise.c
        values = np.concatenate([t.deltas - c, t.deltas, t.deltas + c])
        masses = np.concatenate([t.weights * q, t.weights * (1.0 - 2.0 * q), t.weights * q])
        values, masses = merge_atoms(values, masses)
        return MixtureDensity(i, "discrete", values, masses=masses)
    if isinstance(noise, GaussianNoise):
        sd = math.sqrt(2.0) * noise.sigma
        grid = default_grid(ugame, i) if grid is None else np.asarray(grid, dtype=np.float64)
        centers, weights = merge_atoms(t.deltas, t.weights)
        density = np.zeros_like(grid)
        for c, w in zip(centers, weights):
            density += w * norm.pdf(grid, loc=c, scale=sd)
        comps = tuple((float(c), float(w), sd) for c, w in zip(centers, weights))
        return MixtureDensity(i, "continuous", grid, density=density, components=comps)
    raise UnsupportedAnalyticsError(f"no closed-form density for {noise.kind} noise")
