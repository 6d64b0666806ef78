"""Sampling estimators for uncertain Shapley values.

Enumeration mode draws every coalition's noisy payoff ``repeats`` times,
averages, and pushes the averages through the exact Shapley sum. That costs
``repeats * 2**n`` evaluations, shared by all players. Permutation mode
samples random player orders instead and works for any number of players.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.stats import norm

from .coalition import Coalition, check_exact, excluding_bits, popcount, weights_by_size
from .errors import DomainError
from .game import DeterministicGame, DrawSource, NoNoise, UncertainGame, evaluate
from .rng import COALITION, PERMUTATION, Substream, uniforms
from .shapley_exact import weighted_sum

ENUMERATION = "enumeration"
PERMUTATIONS = "permutation"

_CHUNK = 4096


@dataclass(frozen=True)
class EstimatorConfig:
    repeats: int = 10
    seed: int = 0
    mode: str = ENUMERATION
    permutations: int = 1000
    confidence_level: float = 0.95
    workers: Optional[int] = None

    def __post_init__(self) -> None:
        if self.repeats < 1:
            raise DomainError(f"repeats must be >= 1, got {self.repeats}")
        if self.permutations < 1:
            raise DomainError(f"permutations must be >= 1, got {self.permutations}")
        if not 0 < self.confidence_level < 1:
            raise DomainError(f"confidence level must lie in (0, 1), got {self.confidence_level}")
        if self.mode not in (ENUMERATION, PERMUTATIONS):
            raise DomainError(f"unknown estimator mode {self.mode!r}")
        if not 0 <= self.seed < 1 << 64:
            raise DomainError("seed must be an unsigned 64-bit integer")

    @property
    def z(self) -> float:
        return float(norm.ppf(0.5 + self.confidence_level / 2.0))


@dataclass(frozen=True)
class Estimate:
    player: int
    mean: float
    std_error: float
    ci_low: float
    ci_high: float
    evaluations_used: int

    @classmethod
    def from_mean(cls, player: int, mean: float, std_error: float, z: float, evaluations: int) -> "Estimate":
        half = z * std_error if std_error > 0 else 0.0
        return cls(player, mean, std_error, mean - half, mean + half, evaluations)

    @property
    def half_width(self) -> float:
        return (self.ci_high - self.ci_low) / 2.0

    def covers(self, value: float) -> bool:
        return self.ci_low <= value <= self.ci_high


def _as_uncertain(game: Union[DeterministicGame, UncertainGame]) -> UncertainGame:
    return game if isinstance(game, UncertainGame) else UncertainGame(game)


def _coalition_draws(ugame: UncertainGame, bits: np.ndarray, config: EstimatorConfig, table: np.ndarray):
    """Sample mean and variance (ddof=1) of the noisy payoff at each coalition in ``bits``."""
    n, reps, seed = ugame.n, config.repeats, config.seed
    src = DrawSource(
        uniform=lambda: uniforms(seed, COALITION, bits.astype(np.uint64), reps),
        substream=lambda b: Substream(seed, COALITION, b),
        count=reps,
    )
    draws = table[bits][:, None] + ugame.noise.draw(bits, n, src)
    mean = draws.mean(axis=1)
    var = draws.var(axis=1, ddof=1) if reps > 1 else np.full(len(bits), np.inf)
    return mean, var


def sample_coalition_means(ugame: UncertainGame, config: EstimatorConfig):
    """Per-coalition sample means and variances for all ``2**n`` coalitions.

    Coalitions are processed in chunks, optionally on several threads. Each
    draw depends only on ``(seed, coalition, repeat)``, so the result does not
    depend on the worker count.
    """
    check_exact(ugame.n)
    table = ugame.base.table()
    size = 1 << ugame.n
    if isinstance(ugame.noise, NoNoise):
        return table.copy(), np.zeros(size)
    chunks = [np.arange(lo, min(lo + _CHUNK, size)) for lo in range(0, size, _CHUNK)]
    workers = config.workers or os.cpu_count() or 1
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: _coalition_draws(ugame, b, config, table), chunks))
    else:
        parts = [_coalition_draws(ugame, b, config, table) for b in chunks]
    means = np.concatenate([p[0] for p in parts])
    variances = np.concatenate([p[1] for p in parts])
    return means, variances


def _enumeration_estimate(
    n: int, i: int, means: np.ndarray, variances: np.ndarray, config: EstimatorConfig
) -> Estimate:
    bits = excluding_bits(n, i)
    with_i = bits | (1 << (i - 1))
    w = weights_by_size(n)[popcount(bits)]
    mean = weighted_sum(w, means[with_i] - means[bits])
    # Every coalition appears exactly once, either as S + i or as S, with
    # coefficient +w or -w; the draws at distinct coalitions are independent.
    if np.any(np.isinf(variances)):
        se = math.inf
    else:
        var = weighted_sum(w**2, variances[with_i] + variances[bits]) / config.repeats
        se = math.sqrt(max(var, 0.0))
    return Estimate.from_mean(i, mean, se, config.z, config.repeats << n)


def estimate_uncertain_shapley(
    ugame: Union[DeterministicGame, UncertainGame], i: int, config: EstimatorConfig
) -> Estimate:
    """Sample-mean estimate of player ``i``'s uncertain Shapley value."""
    ugame = _as_uncertain(ugame)
    if not 1 <= i <= ugame.n:
        raise DomainError(f"player index {i} outside 1..{ugame.n}")
    if config.mode == PERMUTATIONS:
        return mc_shapley(ugame, i, config.permutations, config.seed, config.confidence_level)
    means, variances = sample_coalition_means(ugame, config)
    return _enumeration_estimate(ugame.n, i, means, variances, config)


def estimate_all(ugame: Union[DeterministicGame, UncertainGame], config: EstimatorConfig) -> list[Estimate]:
    """Estimates for every player.

    In enumeration mode all players share one set of ``repeats * 2**n``
    draws, so their estimates are correlated.
    """
    ugame = _as_uncertain(ugame)
    if config.mode == PERMUTATIONS:
        return [
            mc_shapley(ugame, i, config.permutations, config.seed, config.confidence_level)
            for i in range(1, ugame.n + 1)
        ]
    means, variances = sample_coalition_means(ugame, config)
    return [_enumeration_estimate(ugame.n, i, means, variances, config) for i in range(1, ugame.n + 1)]


def _noisy_value(ugame: UncertainGame, S: Coalition, stream: Substream, offset: int) -> float:
    v = evaluate(ugame.base, S)
    if isinstance(ugame.noise, NoNoise):
        return v
    src = DrawSource(
        uniform=lambda: stream.uniform(1, offset)[None, :],
        substream=lambda _b: Substream(stream.seed, stream.domain, stream.key ^ (offset << 48)),
        count=1,
    )
    return v + float(ugame.noise.draw(np.array([S.bits]), S.n, src)[0, 0])


def permutation(n: int, stream: Substream) -> np.ndarray:
    """Uniform random ordering of ``1..n`` by Fisher-Yates on the stream's first ``n - 1`` draws."""
    perm = np.arange(1, n + 1)
    if n > 1:
        u = stream.uniform(n - 1)
        for k in range(n - 1, 0, -1):
            j = min(int(u[n - 1 - k] * (k + 1)), k)
            perm[k], perm[j] = perm[j], perm[k]
    return perm


def mc_shapley(
    game: Union[DeterministicGame, UncertainGame],
    i: int,
    permutations: int,
    seed: int,
    confidence_level: float = 0.95,
) -> Estimate:
    """Monte Carlo estimate of a (possibly noisy) Shapley value from random orderings.

    Each ordering contributes one noisy marginal contribution of ``i`` to the
    set of players preceding it. Works for any number of players.
    """
    ugame = _as_uncertain(game)
    n = ugame.n
    if not 1 <= i <= n:
        raise DomainError(f"player index {i} outside 1..{n}")
    if permutations < 1:
        raise DomainError(f"permutations must be >= 1, got {permutations}")
    z = float(norm.ppf(0.5 + confidence_level / 2.0))
    samples = np.empty(permutations)
    for r in range(permutations):
        stream = Substream(seed, PERMUTATION, r)
        perm = permutation(n, stream)
        pos = int(np.flatnonzero(perm == i)[0])
        before = Coalition.from_players(perm[:pos].tolist(), n)
        # offsets n-1 and n keep the two noise draws clear of the shuffle draws
        hi = _noisy_value(ugame, before.with_player(i), stream, n - 1)
        lo = _noisy_value(ugame, before, stream, n)
        samples[r] = hi - lo
    mean = math.fsum(samples) / permutations
    se = float(np.std(samples, ddof=1) / math.sqrt(permutations)) if permutations > 1 else math.inf
    return Estimate.from_mean(i, mean, se, z, 2 * permutations)
