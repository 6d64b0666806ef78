"""Exact Shapley values, marginal contribution distributions and Shapley
values of games with noisy payoffs."""

__version__ = "0.1.0"

from .coalition import (
    MAX_EXACT_PLAYERS,
    Coalition,
    coalition_probability,
    enumerate_excluding,
    parse_coalition,
    shapley_weight,
)
from .errors import (
    CapacityError,
    DomainError,
    MalformedGameError,
    SamplerError,
    ShapleyError,
    SingularFitError,
    UnsupportedAnalyticsError,
)
from .estimator import Estimate, EstimatorConfig, estimate_all, estimate_uncertain_shapley, mc_shapley
from .game import (
    BernoulliOffsetNoise,
    CustomNoise,
    DeterministicGame,
    GaussianNoise,
    NoiseModel,
    NoNoise,
    TableNoise,
    UncertainGame,
    epsilon_moment,
    evaluate,
    noise_moment,
    sample,
)
from .mlvf import (
    Dataset,
    LinearModel,
    fit_linear_regression,
    generate_regression,
    reference_noise,
    r2_score,
    zero_imputed_vf,
)
from .shapley_exact import (
    MarginalDistribution,
    ShapleyResult,
    intrinsic_variance,
    marginal_contribution,
    marginal_distribution,
    moment,
    shapley_all,
    shapley_value,
)
from .shapley_uncertain import (
    MixtureDensity,
    UncertainShapleyResult,
    gamma,
    mixture_density,
    shifted_game,
    uncertain_moment,
    uncertain_shapley,
    variance_decomposition,
)
