"""Exact Shapley values and the distribution of marginal contributions.

For player ``i`` the coalitions ``S`` without ``i`` carry the probability
``w(|S|)``; the marginal contribution ``v(S + i) - v(S)`` is then a discrete
random variable whose mean is the Shapley value and whose variance measures
how much the contributions disagree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coalition import Coalition, check_exact, excluding_bits, popcount, weights_by_size
from .errors import DomainError
from .game import DeterministicGame, evaluate

#: Absolute tolerance under which two marginal contributions count as equal.
MERGE_TOL = 1e-12


@dataclass(frozen=True)
class MarginalDistribution:
    """Finite distribution of one player's marginal contributions.

    ``values`` are sorted and distinct; ``masses`` are positive and sum to one.
    """

    player: int
    values: np.ndarray
    masses: np.ndarray

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self.values.tolist(), self.masses.tolist()))

    def moment(self, k: int) -> float:
        return math.fsum(self.masses * self.values**k)

    def mean(self) -> float:
        return self.moment(1)

    def variance(self) -> float:
        return max(self.moment(2) - self.mean() ** 2, 0.0)

    def total_mass(self) -> float:
        return math.fsum(self.masses)


@dataclass(frozen=True)
class ShapleyResult:
    """Shapley value ``phi[k]`` and intrinsic variance ``sigma2[k]`` of player ``k + 1``."""

    phi: np.ndarray
    sigma2: np.ndarray

    @property
    def n(self) -> int:
        return len(self.phi)


@dataclass(frozen=True)
class PlayerTerms:
    """Per-coalition quantities for one player, in ascending bitmask order of ``S``."""

    bits: np.ndarray  # coalitions S without the player
    weights: np.ndarray  # w(|S|)
    deltas: np.ndarray  # v(S + i) - v(S)


def player_terms(table: np.ndarray, n: int, i: int) -> PlayerTerms:
    bits = excluding_bits(n, i)
    deltas = table[bits | (1 << (i - 1))] - table[bits]
    weights = weights_by_size(n)[popcount(bits)]
    return PlayerTerms(bits, weights, deltas)


def weighted_sum(weights: np.ndarray, terms: np.ndarray) -> float:
    """Correctly rounded ``sum(weights * terms)``; the weights span many decades."""
    return math.fsum(weights * terms)


def _table(game: DeterministicGame) -> np.ndarray:
    check_exact(game.n)
    return game.table()


def _check_player(game: DeterministicGame, i: int) -> None:
    if not 1 <= i <= game.n:
        raise DomainError(f"player index {i} outside 1..{game.n}")


def marginal_contribution(game: DeterministicGame, i: int, S: Coalition) -> float:
    """``v(S + i) - v(S)``."""
    if i in S:
        raise DomainError(f"player {i} is a member of {S}")
    return evaluate(game, S.with_player(i)) - evaluate(game, S)


def shapley_value(game: DeterministicGame, i: int) -> float:
    """Exact Shapley value of player ``i``."""
    _check_player(game, i)
    t = player_terms(_table(game), game.n, i)
    return weighted_sum(t.weights, t.deltas)


def moment(game: DeterministicGame, i: int, k: int) -> float:
    """``k``-th raw moment of player ``i``'s marginal contribution."""
    if k < 1:
        raise DomainError(f"moment order must be >= 1, got {k}")
    _check_player(game, i)
    t = player_terms(_table(game), game.n, i)
    return weighted_sum(t.weights, t.deltas**k)


def intrinsic_variance(game: DeterministicGame, i: int) -> float:
    _check_player(game, i)
    t = player_terms(_table(game), game.n, i)
    return _variance(t)


def _variance(t: PlayerTerms) -> float:
    m1 = weighted_sum(t.weights, t.deltas)
    m2 = weighted_sum(t.weights, t.deltas**2)
    # Round-off can push a zero variance slightly negative.
    return max(m2 - m1 * m1, 0.0)


def shapley_all(game: DeterministicGame) -> ShapleyResult:
    """Shapley values and intrinsic variances of every player.

    The ``2**n`` payoffs are evaluated once and shared by all players.
    """
    table = _table(game)
    phi = np.empty(game.n)
    sigma2 = np.empty(game.n)
    for i in range(1, game.n + 1):
        t = player_terms(table, game.n, i)
        phi[i - 1] = weighted_sum(t.weights, t.deltas)
        sigma2[i - 1] = _variance(t)
    return ShapleyResult(phi, sigma2)


def merge_atoms(values: np.ndarray, masses: np.ndarray, tol: float = MERGE_TOL):
    """Sort atoms and merge runs whose values lie within ``tol`` of the run's first value."""
    order = np.argsort(values, kind="stable")
    values = values[order]
    masses = masses[order]
    out_v: list[float] = []
    out_m: list[float] = []
    start = 0
    for k in range(1, len(values) + 1):
        if k == len(values) or values[k] - values[start] > tol:
            out_v.append(float(values[start]))
            out_m.append(math.fsum(masses[start:k]))
            start = k
    return np.array(out_v), np.array(out_m)


def marginal_distribution(game: DeterministicGame, i: int, tol: float = MERGE_TOL) -> MarginalDistribution:
    """Distribution of ``v(S + i) - v(S)`` when ``S`` is drawn with probability ``w(|S|)``."""
    _check_player(game, i)
    t = player_terms(_table(game), game.n, i)
    values, masses = merge_atoms(t.deltas, t.weights, tol)
    return MarginalDistribution(i, values, masses)
