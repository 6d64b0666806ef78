"""Coalitions as bitmasks, subset enumeration and Shapley weights.

Players are labelled ``1..n``. Player ``k`` corresponds to bit ``k - 1`` of
the mask, so the mask ``5`` is the coalition ``{1, 3}``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .errors import CapacityError, DomainError

#: Largest player count accepted by exact (full enumeration) routines.
MAX_EXACT_PLAYERS = 24


@dataclass(frozen=True, order=True)
class Coalition:
    """An immutable subset of the players ``{1, ..., n}``."""

    bits: int
    n: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise DomainError(f"player count must be >= 1, got {self.n}")
        if self.bits < 0 or self.bits >> self.n:
            raise DomainError(f"bitmask {self.bits} has bits outside {self.n} players")

    @classmethod
    def from_players(cls, players: Iterable[int], n: int) -> "Coalition":
        bits = 0
        for p in players:
            if not 1 <= p <= n:
                raise DomainError(f"player {p} outside 1..{n}")
            bits |= 1 << (p - 1)
        return cls(bits, n)

    @classmethod
    def empty(cls, n: int) -> "Coalition":
        return cls(0, n)

    @classmethod
    def grand(cls, n: int) -> "Coalition":
        return cls((1 << n) - 1, n)

    @property
    def players(self) -> list[int]:
        return [k + 1 for k in range(self.n) if self.bits >> k & 1]

    def __len__(self) -> int:
        return self.bits.bit_count()

    def __contains__(self, player: int) -> bool:
        return 1 <= player <= self.n and bool(self.bits >> (player - 1) & 1)

    def __iter__(self) -> Iterator[int]:
        return iter(self.players)

    def with_player(self, player: int) -> "Coalition":
        _check_player(self.n, player)
        return Coalition(self.bits | 1 << (player - 1), self.n)

    def without_player(self, player: int) -> "Coalition":
        _check_player(self.n, player)
        return Coalition(self.bits & ~(1 << (player - 1)), self.n)

    def to_key(self) -> str:
        """Decimal bitmask string used as a JSON key."""
        return str(self.bits)

    def __str__(self) -> str:
        return "[" + ",".join(str(p) for p in self.players) + "]"


def parse_coalition(text: str | int | list, n: int) -> Coalition:
    """Accept a decimal bitmask (``"5"`` or ``5``) or a player list (``"[1,3]"``)."""
    if isinstance(text, (list, tuple)):
        return Coalition.from_players(text, n)
    if isinstance(text, int) and not isinstance(text, bool):
        return Coalition(text, n)
    s = str(text).strip()
    if s.startswith("["):
        try:
            players = json.loads(s)
        except json.JSONDecodeError as exc:
            raise DomainError(f"cannot parse coalition {text!r}") from exc
        return Coalition.from_players(players, n)
    try:
        return Coalition(int(s), n)
    except ValueError as exc:
        raise DomainError(f"cannot parse coalition {text!r}") from exc


def _check_player(n: int, i: int) -> None:
    if not 1 <= i <= n:
        raise DomainError(f"player index {i} outside 1..{n}")


def check_exact(n: int) -> None:
    """Raise :class:`CapacityError` unless ``1 <= n <= MAX_EXACT_PLAYERS``."""
    if not 1 <= n <= MAX_EXACT_PLAYERS:
        raise CapacityError(
            f"exact enumeration supports 1..{MAX_EXACT_PLAYERS} players, got {n}"
        )


def excluding_bits(n: int, i: int) -> np.ndarray:
    """Bitmasks of all coalitions without player ``i``, ascending.

    The 2^(n-1) masks are produced by inserting a zero at bit ``i - 1`` into
    each integer ``0 .. 2^(n-1) - 1``, which keeps the output sorted.
    """
    check_exact(n)
    _check_player(n, i)
    k = np.arange(1 << (n - 1), dtype=np.int64)
    low_mask = (1 << (i - 1)) - 1
    return ((k >> (i - 1)) << i) | (k & low_mask)


def enumerate_excluding(n: int, i: int) -> list[Coalition]:
    """All coalitions ``S`` of ``{1..n} \\ {i}`` in ascending bitmask order."""
    return [Coalition(int(b), n) for b in excluding_bits(n, i)]


def shapley_weight(n: int, s: int) -> float:
    """Weight ``s!(n-s-1)!/n!`` of a coalition of size ``s`` not containing the player.

    Evaluated as ``1 / (n * C(n-1, s))``; the binomial is an exact integer, so
    the result is a single correctly rounded division.
    """
    if n < 1:
        raise DomainError(f"player count must be >= 1, got {n}")
    if not 0 <= s <= n - 1:
        raise DomainError(f"coalition size {s} outside 0..{n - 1}")
    return 1.0 / (n * math.comb(n - 1, s))


def weights_by_size(n: int) -> np.ndarray:
    """Array ``w`` with ``w[s] = shapley_weight(n, s)`` for ``s = 0..n-1``."""
    return np.array([shapley_weight(n, s) for s in range(n)])


def coalition_probability(n: int, i: int, S: Coalition) -> float:
    """Probability of drawing ``S`` from the coalition law seen by player ``i``."""
    _check_player(n, i)
    if S.n != n:
        raise DomainError(f"coalition is over {S.n} players, expected {n}")
    if i in S:
        raise DomainError(f"player {i} is a member of {S}")
    return shapley_weight(n, len(S))


def popcount(bits: np.ndarray) -> np.ndarray:
    return np.bitwise_count(bits.astype(np.uint64)).astype(np.int64)
