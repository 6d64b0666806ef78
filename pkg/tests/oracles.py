"""Brute-force reference implementations, independent of the package code paths."""

import itertools
from fractions import Fraction
from math import factorial

import numpy as np


def subsets_without(n, i):
    """All subsets of {1..n} \\ {i} as frozensets, via itertools."""
    others = [p for p in range(1, n + 1) if p != i]
    return [frozenset(c) for r in range(len(others) + 1) for c in itertools.combinations(others, r)]


def to_bits(players):
    return sum(1 << (p - 1) for p in players)


def factorial_weight(n, s):
    return Fraction(factorial(s) * factorial(n - s - 1), factorial(n))


def permutation_shapley(values, n):
    """Average marginal contribution over all n! orderings."""
    phi = np.zeros(n)
    for perm in itertools.permutations(range(1, n + 1)):
        bits = 0
        for p in perm:
            new = bits | 1 << (p - 1)
            phi[p - 1] += values[new] - values[bits]
            bits = new
    return phi / factorial(n)


def permutation_marginals(values, n, i):
    """Marginal contribution of i in every ordering (list of n! numbers)."""
    out = []
    for perm in itertools.permutations(range(1, n + 1)):
        pos = perm.index(i)
        bits = to_bits(perm[:pos])
        out.append(values[bits | 1 << (i - 1)] - values[bits])
    return np.array(out)


def random_table(rng, n, scale=1.0):
    return scale * rng.normal(size=1 << n)


def make_symmetric(values, n, i, j):
    """Copy payoffs so that v(S + i) == v(S + j) for every S avoiding i and j."""
    v = np.array(values, dtype=float)
    bi, bj = 1 << (i - 1), 1 << (j - 1)
    for b in range(1 << n):
        if not b & (bi | bj):
            v[b | bj] = v[b | bi]
    return v


def make_null(values, n, i):
    v = np.array(values, dtype=float)
    bi = 1 << (i - 1)
    for b in range(1 << n):
        if not b & bi:
            v[b | bi] = v[b]
    return v


def sample_noisy_marginals(values, n, i, noise_sampler, size, rng):
    """Draws of v(S+i) - v(S) + nu(S+i) - nu(S) with S drawn via a random ordering.

    ``noise_sampler(bits_array, rng)`` returns one independent noise draw per entry.
    """
    keys = rng.random((size, n))
    order = np.argsort(keys, axis=1) + 1
    pos = np.argmax(order == i, axis=1)
    before = np.zeros(size, dtype=np.int64)
    for col in range(n - 1):
        take = col < pos
        before[take] |= 1 << (order[take, col] - 1)
    after = before | 1 << (i - 1)
    values = np.asarray(values)
    return values[after] - values[before] + noise_sampler(after, rng) - noise_sampler(before, rng)
