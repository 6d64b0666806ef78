import math

import numpy as np
import pytest

from oracles import make_null, make_symmetric, random_table, sample_noisy_marginals
from uncertain_shapley import (
    BernoulliOffsetNoise,
    CustomNoise,
    DeterministicGame,
    GaussianNoise,
    NoNoise,
    TableNoise,
    UncertainGame,
    UnsupportedAnalyticsError,
    gamma,
    marginal_distribution,
    mixture_density,
    moment,
    shapley_all,
    shapley_value,
    shifted_game,
    uncertain_moment,
    uncertain_shapley,
    variance_decomposition,
)

P, C, SIGMA = 0.33, 0.05, 0.01
# Means of the coalition-dependent example noise, indexed by bitmask.
TABLE_MEANS = [0.0, 0.1, 0.0, 0.3]


def table_noise(means=TABLE_MEANS, var=0.0):
    means = np.asarray(means, dtype=float)
    return TableNoise.from_mean_variance(means, np.full(len(means), var))


def random_table_noise(rng, n):
    return TableNoise.from_mean_variance(rng.normal(size=1 << n), rng.random(1 << n))


def test_gamma_examples(game_a):
    assert gamma(UncertainGame(game_a, BernoulliOffsetNoise(P, C)), 1) == pytest.approx(0.0, abs=1e-18)
    assert gamma(UncertainGame(game_a, GaussianNoise(3.0)), 2) == 0.0
    # 1/2 (0.1 - 0) + 1/2 (0.3 - 0)
    assert gamma(UncertainGame(game_a, table_noise()), 1) == pytest.approx(0.2, abs=1e-15)


def test_uncertain_shapley_examples(game_a):
    r = uncertain_shapley(UncertainGame(game_a, BernoulliOffsetNoise(P, C)))
    np.testing.assert_allclose(r.phi_tilde, r.phi, atol=1e-17)
    np.testing.assert_allclose(r.sigma2_gamma, 1.1055e-3, rtol=0, atol=1e-12)
    r = uncertain_shapley(UncertainGame(game_a, GaussianNoise(SIGMA)))
    np.testing.assert_allclose(r.sigma2_gamma, 2e-4, rtol=1e-14)
    r = uncertain_shapley(UncertainGame(game_a, table_noise()))
    assert r.phi_tilde[0] == pytest.approx(1.7, abs=1e-15)
    assert np.all(r.phi_tilde == r.phi + r.gamma)


def test_shifted_game_examples(game_a):
    assert np.array_equal(shifted_game(UncertainGame(game_a, GaussianNoise(1.0))).table(), game_a.table())
    sg = shifted_game(UncertainGame(game_a, table_noise()))
    assert sg.table()[1] == pytest.approx(1.2, abs=1e-15)
    assert sg.table()[0] == game_a.table()[0]


def test_uncertain_moment_examples(game_a):
    ug = UncertainGame(game_a, BernoulliOffsetNoise(P, C))
    assert uncertain_moment(ug, 1, 1) == pytest.approx(shapley_value(game_a, 1), abs=1e-15)
    ug = UncertainGame(game_a, GaussianNoise(SIGMA))
    assert uncertain_moment(ug, 1, 2) == pytest.approx(2.5002, abs=1e-14)
    ug = UncertainGame(game_a)
    for k in (1, 2, 3, 5):
        assert uncertain_moment(ug, 2, k) == moment(game_a, 2, k)


def test_variance_decomposition_examples(game_a):
    d = variance_decomposition(UncertainGame(game_a, BernoulliOffsetNoise(P, C)), 1)
    assert d.xi == 0.0
    assert d.sigma2_intrinsic == 0.25
    assert d.sigma2_gamma == pytest.approx(1.1055e-3, abs=1e-12)
    assert d.sigma2_total == pytest.approx(0.2511055, abs=1e-12)
    assert tuple(variance_decomposition(UncertainGame(game_a), 2)) == (0.25, 0.0, 0.0, 0.25)


def test_mixture_density_examples(game_a):
    none = mixture_density(UncertainGame(game_a), 1)
    ref = marginal_distribution(game_a, 1)
    assert np.array_equal(none.values, ref.values) and np.array_equal(none.masses, ref.masses)

    b = mixture_density(UncertainGame(game_a, BernoulliOffsetNoise(P, C)), 1)
    np.testing.assert_allclose(b.values, [0.95, 1.0, 1.05, 1.95, 2.0, 2.05], atol=1e-15)
    q = 0.2211  # p(1 - p)
    np.testing.assert_allclose(b.masses, [q / 2, 0.5578 / 2, q / 2] * 2, atol=1e-15)

    ug = UncertainGame(game_a, GaussianNoise(SIGMA))
    g = mixture_density(ug, 1)
    assert g.kind == "continuous" and len(g.values) == 1024
    assert g.mean() == pytest.approx(uncertain_shapley(ug).phi_tilde[0], abs=1e-6)


def test_mixture_density_rejects_table_noise(game_a):
    with pytest.raises(UnsupportedAnalyticsError):
        mixture_density(UncertainGame(game_a, table_noise()), 1)


def test_custom_noise_without_moments_rejected(game_a):
    ug = UncertainGame(game_a, CustomNoise(lambda s, r, k: r.normal(size=k)))
    with pytest.raises(UnsupportedAnalyticsError):
        gamma(ug, 1)


def test_custom_noise_with_moments(game_a):
    mom = {0: 1.0, 1: 0.5, 2: 0.5}  # Bernoulli(0.5)
    noise = CustomNoise(lambda s, r, k: (r.random(k) < 0.5).astype(float), lambda s, k: mom[k] if k < 3 else 0.5)
    r = uncertain_shapley(UncertainGame(game_a, noise))
    assert r.gamma[0] == 0.0
    assert r.sigma2_gamma[0] == pytest.approx(0.5, abs=1e-15)


@pytest.mark.parametrize("n", [2, 3, 5, 7])
def test_theorem_equivalence(rng, n):
    for _ in range(5):
        ug = UncertainGame(DeterministicGame(n, random_table(rng, n)), random_table_noise(rng, n))
        r = uncertain_shapley(ug)
        np.testing.assert_allclose(shapley_all(shifted_game(ug)).phi, r.phi_tilde, atol=1e-10)


def test_uncertain_properties(rng):
    n = 5
    for _ in range(10):
        v = random_table(rng, n)
        noise = random_table_noise(rng, n)
        r = uncertain_shapley(UncertainGame(DeterministicGame(n, v), noise))
        # efficiency with the shifted grand-coalition payoff
        assert r.phi_tilde.sum() == pytest.approx(v[-1] - v[0] + r.gamma.sum(), abs=1e-10)
        # symmetry
        vs = make_symmetric(v, n, 2, 4)
        rs = uncertain_shapley(UncertainGame(DeterministicGame(n, vs), noise))
        assert rs.phi_tilde[1] - rs.phi_tilde[3] == pytest.approx(rs.gamma[1] - rs.gamma[3], abs=1e-12)
        # null player
        vn = make_null(v, n, 3)
        rn = uncertain_shapley(UncertainGame(DeterministicGame(n, vn), noise))
        assert rn.phi_tilde[2] == pytest.approx(rn.gamma[2], abs=1e-12)


def test_gamma_linearity(rng):
    n = 4
    game = DeterministicGame(n, random_table(rng, n))
    a, b = random_table_noise(rng, n), random_table_noise(rng, n)
    ga = np.array([gamma(UncertainGame(game, a), i) for i in range(1, n + 1)])
    gb = np.array([gamma(UncertainGame(game, b), i) for i in range(1, n + 1)])
    gab = np.array([gamma(UncertainGame(game, a + b), i) for i in range(1, n + 1)])
    g3 = np.array([gamma(UncertainGame(game, -2.5 * a), i) for i in range(1, n + 1)])
    np.testing.assert_allclose(gab, ga + gb, atol=1e-12)
    np.testing.assert_allclose(g3, -2.5 * ga, atol=1e-12)


NOISES = [NoNoise(), GaussianNoise(0.3), BernoulliOffsetNoise(0.33, 0.05), BernoulliOffsetNoise(0.7, -0.4)]


@pytest.mark.parametrize("noise", NOISES + ["table"], ids=lambda x: getattr(x, "kind", x))
def test_decomposition_consistency(rng, noise):
    n = 4
    if noise == "table":
        noise = random_table_noise(rng, n)
    ug = UncertainGame(DeterministicGame(n, random_table(rng, n)), noise)
    r = uncertain_shapley(ug)
    for i in range(1, n + 1):
        m1, m2 = uncertain_moment(ug, i, 1), uncertain_moment(ug, i, 2)
        assert m1 == pytest.approx(r.phi_tilde[i - 1], abs=1e-12)
        assert r.sigma2_total[i - 1] == pytest.approx(m2 - m1**2, abs=1e-10)
        parts = r.sigma2_intrinsic[i - 1] + r.sigma2_gamma[i - 1] + r.xi[i - 1]
        assert r.sigma2_total[i - 1] == pytest.approx(parts, abs=1e-10)
        assert r.sigma2_intrinsic[i - 1] >= 0 and r.sigma2_gamma[i - 1] >= 0
    if noise.coalition_independent:
        assert np.all(r.gamma == 0) and np.all(np.abs(r.xi) < 1e-15)


@pytest.mark.parametrize("noise", NOISES, ids=lambda x: x.kind)
def test_mixture_density_moments(rng, noise):
    n = 3
    ug = UncertainGame(DeterministicGame(n, random_table(rng, n, 0.2)), noise)
    for i in range(1, n + 1):
        d = mixture_density(ug, i)
        assert d.total_mass() == pytest.approx(1.0, abs=1e-6)
        assert d.moment(1) == pytest.approx(uncertain_moment(ug, i, 1), abs=1e-6)
        assert d.moment(2) == pytest.approx(uncertain_moment(ug, i, 2), abs=1e-6)


def _noise_sampler(noise):
    if isinstance(noise, GaussianNoise):
        return lambda bits, r: noise.sigma * r.standard_normal(len(bits))
    if isinstance(noise, BernoulliOffsetNoise):
        return lambda bits, r: noise.c * (r.random(len(bits)) < noise.p)
    if isinstance(noise, TableNoise):
        return lambda bits, r: noise.means[bits] + np.sqrt(noise.variances[bits]) * r.standard_normal(len(bits))
    return lambda bits, r: np.zeros(len(bits))


@pytest.mark.parametrize("noise", NOISES[1:] + ["table"], ids=lambda x: getattr(x, "kind", x))
def test_monte_carlo_consistency(rng, noise):
    n = 4
    if noise == "table":
        noise = random_table_noise(rng, n)
    values = random_table(rng, n)
    ug = UncertainGame(DeterministicGame(n, values), noise)
    r = uncertain_shapley(ug)
    size = 100_000
    for i in (1, 3):
        x = sample_noisy_marginals(values, n, i, _noise_sampler(noise), size, rng)
        se_mean = x.std(ddof=1) / math.sqrt(size)
        assert abs(x.mean() - r.phi_tilde[i - 1]) <= 5 * se_mean
        d2 = (x - r.phi_tilde[i - 1]) ** 2
        se_var = d2.std(ddof=1) / math.sqrt(size)
        assert abs(d2.mean() - r.sigma2_total[i - 1]) <= 5 * se_var
