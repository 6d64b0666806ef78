"""Deterministic games, noise models and uncertain games.

A deterministic game maps each coalition to a real payoff. An uncertain game
adds a random term to that payoff; the noise law may depend on the coalition.
Noise draws at different coalitions, and at repeated evaluations of the same
coalition, are independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import ndtri

from .coalition import Coalition, check_exact
from .errors import DomainError, MalformedGameError, SamplerError, UnsupportedAnalyticsError
from .rng import Substream


class DeterministicGame:
    """A value function over the coalitions of ``n`` players.

    Give either ``values``, a table of ``2**n`` payoffs indexed by bitmask, or
    ``func``, a deterministic callable taking a :class:`Coalition`. A callable
    may also expose ``table(n)`` returning all payoffs at once; exact routines
    use it instead of ``2**n`` separate calls.

    The empty coalition's payoff is stored as given, not shifted to zero.
    """

    def __init__(
        self,
        n: int,
        values: Optional[np.ndarray] = None,
        func: Optional[Callable[[Coalition], float]] = None,
    ) -> None:
        if n < 1:
            raise DomainError(f"player count must be >= 1, got {n}")
        if (values is None) == (func is None):
            raise MalformedGameError("give exactly one of values or func")
        self.n = n
        self._func = func
        self._table: Optional[np.ndarray] = None
        if values is not None:
            arr = np.asarray(values, dtype=np.float64)
            if arr.shape != (1 << n,):
                raise MalformedGameError(f"expected {1 << n} values, got shape {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise MalformedGameError("game values must be finite")
            arr.flags.writeable = False
            self._table = arr

    @classmethod
    def from_function(cls, n: int, func: Callable[[Coalition], float]) -> "DeterministicGame":
        return cls(n, func=func)

    @property
    def is_table(self) -> bool:
        return self._func is None

    def __call__(self, S: Coalition) -> float:
        return evaluate(self, S)

    def table(self) -> np.ndarray:
        """All ``2**n`` payoffs indexed by bitmask, computed once and cached."""
        if self._table is None:
            check_exact(self.n)
            batch = getattr(self._func, "table", None)
            if batch is not None:
                arr = np.asarray(batch(self.n), dtype=np.float64)
            else:
                arr = np.array(
                    [self._func(Coalition(b, self.n)) for b in range(1 << self.n)],
                    dtype=np.float64,
                )
            if arr.shape != (1 << self.n,) or not np.all(np.isfinite(arr)):
                raise MalformedGameError("value function produced missing or non-finite payoffs")
            arr.flags.writeable = False
            self._table = arr
        return self._table

    def __add__(self, other: "DeterministicGame") -> "DeterministicGame":
        _same_n(self, other)
        return DeterministicGame(self.n, self.table() + other.table())

    def __mul__(self, alpha: float) -> "DeterministicGame":
        return DeterministicGame(self.n, alpha * self.table())

    __rmul__ = __mul__

    def __repr__(self) -> str:
        kind = "table" if self.is_table else "callback"
        return f"DeterministicGame(n={self.n}, {kind})"


def _same_n(a: DeterministicGame, b: DeterministicGame) -> None:
    if a.n != b.n:
        raise DomainError(f"games have different player counts {a.n} and {b.n}")


def evaluate(game: DeterministicGame, S: Coalition) -> float:
    """Payoff ``v(S)``."""
    if S.n != game.n:
        raise DomainError(f"coalition is over {S.n} players, game has {game.n}")
    if game._table is not None:
        return float(game._table[S.bits])
    value = float(game._func(S))
    if not math.isfinite(value):
        raise MalformedGameError(f"v({S}) is not finite")
    return value


# ---------------------------------------------------------------------------
# Noise models


def _normal_raw_moment(mean: np.ndarray | float, var: np.ndarray | float, k: int):
    """E[X^k] for X ~ Normal(mean, var)."""
    total = np.zeros_like(np.asarray(mean, dtype=np.float64))
    for j in range(0, k + 1, 2):
        dfact = math.prod(range(j - 1, 0, -2))
        total = total + math.comb(k, j) * np.power(mean, k - j) * np.power(var, j // 2) * dfact
    return total


class NoiseModel:
    """Random term added to a game's payoffs.

    Subclasses implement ``draw`` and, when the law is known in closed form,
    ``moments``.
    """

    kind = "abstract"
    #: True when the noise law is the same for every coalition.
    coalition_independent = False

    def draw(self, bits: np.ndarray, n: int, streams: "DrawSource") -> np.ndarray:
        """Noise draws of shape ``(len(bits), streams.count)``."""
        raise NotImplementedError

    def moments(self, n: int, k: int) -> np.ndarray:
        """``E[noise**k | S]`` for every bitmask ``S``, as an array of length ``2**n``."""
        raise UnsupportedAnalyticsError(f"{self.kind} noise has no analytic moments")

    def moment(self, S: Coalition, k: int) -> float:
        if k < 0:
            raise DomainError(f"moment order must be >= 0, got {k}")
        return float(self.moments(S.n, k)[S.bits]) if not self.coalition_independent else float(
            self.moments(1, k)[0]
        )


@dataclass
class DrawSource:
    """Uniform variates feeding one batch of noise draws.

    ``uniform`` has shape ``(len(bits), count)``; ``substreams`` yields the
    per-coalition :class:`Substream` for samplers that need a full generator.
    """

    uniform: Callable[[], np.ndarray]
    substream: Callable[[int], Substream]
    count: int


class NoNoise(NoiseModel):
    kind = "none"
    coalition_independent = True

    def draw(self, bits, n, streams):
        return np.zeros((len(bits), streams.count))

    def moments(self, n, k):
        return np.full(1 << n, 1.0 if k == 0 else 0.0)

    def __repr__(self) -> str:
        return "NoNoise()"


@dataclass(frozen=True)
class GaussianNoise(NoiseModel):
    """Centered normal noise with standard deviation ``sigma``."""

    sigma: float
    kind = "gaussian"
    coalition_independent = True

    def __post_init__(self) -> None:
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise DomainError(f"sigma must be positive, got {self.sigma}")

    def draw(self, bits, n, streams):
        return self.sigma * ndtri(streams.uniform())

    def moments(self, n, k):
        return np.full(1 << n, float(_normal_raw_moment(0.0, self.sigma**2, k)))


@dataclass(frozen=True)
class BernoulliOffsetNoise(NoiseModel):
    """Noise ``c * B`` with ``B ~ Bernoulli(p)``: adds ``c`` with probability ``p``."""

    p: float
    c: float
    kind = "bernoulli"
    coalition_independent = True

    def __post_init__(self) -> None:
        if not 0 < self.p < 1:
            raise DomainError(f"p must lie in (0, 1), got {self.p}")
        if not math.isfinite(self.c):
            raise DomainError("c must be finite")

    def draw(self, bits, n, streams):
        return np.where(streams.uniform() < self.p, self.c, 0.0)

    def moments(self, n, k):
        return np.full(1 << n, 1.0 if k == 0 else self.p * self.c**k)


class TableNoise(NoiseModel):
    """Coalition dependent noise given by per-coalition mean and second moment.

    Without a ``sampler`` the noise at ``S`` is normal with the tabulated mean
    and variance, and moments of every order are available. With a custom
    ``sampler(S, rng, size)`` only the first two moments are known.
    """

    kind = "table"

    def __init__(
        self,
        means: np.ndarray,
        second_moments: np.ndarray,
        sampler: Optional[Callable[[Coalition, np.random.Generator, int], np.ndarray]] = None,
    ) -> None:
        self.means = np.asarray(means, dtype=np.float64)
        self.second_moments = np.asarray(second_moments, dtype=np.float64)
        if self.means.ndim != 1 or self.means.shape != self.second_moments.shape:
            raise MalformedGameError("means and second moments must be equal-length vectors")
        size = len(self.means)
        if size & (size - 1) or size == 0:
            raise MalformedGameError(f"noise table length {size} is not a power of two")
        if not (np.all(np.isfinite(self.means)) and np.all(np.isfinite(self.second_moments))):
            raise MalformedGameError("noise moments must be finite")
        self.variances = self.second_moments - self.means**2
        if np.any(self.variances < -1e-12 * np.maximum(1.0, self.second_moments)):
            raise DomainError("second moment below squared mean")
        self.variances = np.maximum(self.variances, 0.0)
        self.sampler = sampler

    @classmethod
    def from_mean_variance(cls, means, variances, sampler=None) -> "TableNoise":
        means = np.asarray(means, dtype=np.float64)
        return cls(means, np.asarray(variances, dtype=np.float64) + means**2, sampler)

    @property
    def n(self) -> int:
        return len(self.means).bit_length() - 1

    def _check_n(self, n: int) -> None:
        if n != self.n:
            raise DomainError(f"noise table is for {self.n} players, game has {n}")

    def draw(self, bits, n, streams):
        self._check_n(n)
        if self.sampler is None:
            z = ndtri(streams.uniform())
            return self.means[bits][:, None] + np.sqrt(self.variances[bits])[:, None] * z
        return _custom_draws(self.sampler, bits, n, streams)

    def moments(self, n, k):
        self._check_n(n)
        if k == 0:
            return np.ones(1 << n)
        if k == 1:
            return self.means.copy()
        if k == 2:
            return self.second_moments.copy()
        if self.sampler is not None:
            raise UnsupportedAnalyticsError(
                f"table noise with a custom sampler only declares moments up to order 2, asked for {k}"
            )
        return _normal_raw_moment(self.means, self.variances, k)

    def __add__(self, other: "TableNoise") -> "TableNoise":
        """Sum of two independent table noises (moments add accordingly)."""
        self._check_n(other.n)
        means = self.means + other.means
        return TableNoise.from_mean_variance(means, self.variances + other.variances)

    def __mul__(self, alpha: float) -> "TableNoise":
        return TableNoise.from_mean_variance(alpha * self.means, alpha**2 * self.variances)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"TableNoise(n={self.n})"


class CustomNoise(NoiseModel):
    """Noise drawn by a user callable ``sampler(S, rng, size) -> array``.

    ``moments`` may be given as ``moments(S, k) -> float`` to enable analytics.
    """

    kind = "custom"

    def __init__(
        self,
        sampler: Callable[[Coalition, np.random.Generator, int], np.ndarray],
        moments: Optional[Callable[[Coalition, int], float]] = None,
    ) -> None:
        self.sampler = sampler
        self._moments = moments

    def draw(self, bits, n, streams):
        return _custom_draws(self.sampler, bits, n, streams)

    def moments(self, n, k):
        if self._moments is None:
            raise UnsupportedAnalyticsError(
                "custom noise declares no moments; use the estimator module instead"
            )
        return np.array([self._moments(Coalition(b, n), k) for b in range(1 << n)], dtype=np.float64)


def _custom_draws(sampler, bits, n, streams: DrawSource) -> np.ndarray:
    out = np.empty((len(bits), streams.count))
    for r, b in enumerate(bits):
        S = Coalition(int(b), n)
        try:
            vals = np.asarray(sampler(S, streams.substream(int(b)).generator(), streams.count), dtype=np.float64)
        except Exception as exc:
            raise SamplerError(f"noise sampler failed at {S}: {exc}") from exc
        if vals.shape != (streams.count,) or not np.all(np.isfinite(vals)):
            raise SamplerError(f"noise sampler returned invalid draws at {S}")
        out[r] = vals
    return out


@dataclass
class UncertainGame:
    """A deterministic game plus a noise model: ``v(S) + noise(S)``."""

    base: DeterministicGame
    noise: NoiseModel = field(default_factory=NoNoise)

    @property
    def n(self) -> int:
        return self.base.n


def sample(ugame: UncertainGame, S: Coalition, stream: Substream, size: Optional[int] = None):
    """Draw ``v(S) + noise(S)`` from ``stream``.

    Returns one float, or an array of ``size`` consecutive draws. The same
    ``stream`` always yields the same draws.
    """
    v = evaluate(ugame.base, S)
    if isinstance(ugame.noise, NoNoise):
        return v if size is None else np.full(size, v)
    count = 1 if size is None else size
    src = DrawSource(
        uniform=lambda: stream.uniform(count)[None, :],
        substream=lambda _b: stream,
        count=count,
    )
    draws = v + ugame.noise.draw(np.array([S.bits]), S.n, src)[0]
    return float(draws[0]) if size is None else draws


def noise_moment(ugame: UncertainGame, S: Coalition, k: int) -> float:
    """``E[noise(S)**k]``."""
    if S.n != ugame.n:
        raise DomainError(f"coalition is over {S.n} players, game has {ugame.n}")
    return ugame.noise.moment(S, k)


def epsilon_moment_table(noise: NoiseModel, n: int, i: int, k: int) -> np.ndarray:
    """``E[eps_i(S)**k]`` for every bitmask ``S`` (entries with ``i`` in ``S`` unused).

    ``eps_i(S) = noise(S + i) - noise(S)`` with independent terms, so the
    binomial theorem factorises each moment into noise moments.
    """
    if k < 0:
        raise DomainError(f"moment order must be >= 0, got {k}")
    bit = 1 << (i - 1)
    idx = np.arange(1 << n)
    with_i = idx | bit
    total = np.zeros(1 << n)
    for j in range(k + 1):
        coeff = math.comb(k, j) * (-1) ** (k - j)
        total = total + coeff * noise.moments(n, j)[with_i] * noise.moments(n, k - j)
    return total


def epsilon_moment(ugame: UncertainGame, i: int, S: Coalition, k: int) -> float:
    """``E[(noise(S + i) - noise(S))**k]`` for a player ``i`` outside ``S``."""
    if i in S:
        raise DomainError(f"player {i} is a member of {S}")
    if S.n != ugame.n:
        raise DomainError(f"coalition is over {S.n} players, game has {ugame.n}")
    T = S.with_player(i)
    total = 0.0
    for j in range(k + 1):
        total += math.comb(k, j) * (-1) ** (k - j) * ugame.noise.moment(T, j) * ugame.noise.moment(S, k - j)
    return total
