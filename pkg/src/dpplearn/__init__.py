"""Bayesian and maximum-likelihood learning of DPP and k-DPP kernels.

The package factors kernels into quality and similarity parts, evaluates
exact or bounded likelihoods for discrete and continuous ground sets, and
fits parameters by random-walk Metropolis, slice sampling, their
bound-driven anytime variants, or gradient ascent. Moment-based model
checks, exact samplers, and conditional k-DPPs round out the toolkit; the
dpplearn console script exposes the whole pipeline on files.
"""

from .conditional import (Annotation, ConditionalKdppModel, PooledKdppModel,
                          conditional_kdpp_log_likelihood, conditional_kernel,
                          conditional_log_prob,
                          conditional_single_item_probs)
from .kernels import (DiscreteKernel, GaussianSpectrum, GaussianTheta,
                      GroundSet, PointConfig, build_discrete_kernel,
                      build_feature_kernel, build_polynomial_kernel,
                      elementary_symmetric, log_elementary_symmetric,
                      square_grid, trace_gaussian)
from .likelihood import (BoundedLogPosteriorTarget, ContinuousGaussianFamily,
                         DiscreteGaussianFamily, FeatureKernelFamily,
                         InvGammaPrior, InvalidParameters, LogPosteriorTarget,
                         ModelSpec, PolynomialFamily, dpp_log_likelihood,
                         kdpp_log_likelihood, log_posterior,
                         log_posterior_bounds, match_to_ground)
from .linalg import FactorizationError
from .mcmc import (BoundsUnresolvedError, Chain, autocorrelation, bounded_mh,
                   bounded_slice, gelman_rubin, rw_mh, slice_hyperrect,
                   slice_univariate)
from .mle import (GradReport, finite_difference_gradient, grad_log_likelihood,
                  gradient_ascent)
from .moments import (continuous_gaussian_moments, discrete_moment,
                      empirical_moment, marginal_kernel, moment_check,
                      moment_match_grid)
from .sampling import (ContinuousGridSampler, sample_continuous_via_grid,
                       sample_dpp, sample_kdpp)
from .spectral import (EigenTruncation, NormalizerBounds,
                       dpp_log_normalizer_bounds, kdpp_log_normalizer_bounds,
                       tighten, truncation_of)

__version__ = "0.1.0"

__all__ = [
    "Annotation",
    "BoundedLogPosteriorTarget",
    "BoundsUnresolvedError",
    "Chain",
    "ConditionalKdppModel",
    "ContinuousGaussianFamily",
    "ContinuousGridSampler",
    "DiscreteGaussianFamily",
    "DiscreteKernel",
    "EigenTruncation",
    "FactorizationError",
    "FeatureKernelFamily",
    "GaussianSpectrum",
    "GaussianTheta",
    "GradReport",
    "GroundSet",
    "InvGammaPrior",
    "InvalidParameters",
    "LogPosteriorTarget",
    "ModelSpec",
    "NormalizerBounds",
    "PointConfig",
    "PolynomialFamily",
    "PooledKdppModel",
    "autocorrelation",
    "bounded_mh",
    "bounded_slice",
    "build_discrete_kernel",
    "build_feature_kernel",
    "build_polynomial_kernel",
    "conditional_kdpp_log_likelihood",
    "conditional_kernel",
    "conditional_log_prob",
    "conditional_single_item_probs",
    "continuous_gaussian_moments",
    "discrete_moment",
    "dpp_log_likelihood",
    "dpp_log_normalizer_bounds",
    "elementary_symmetric",
    "empirical_moment",
    "finite_difference_gradient",
    "gelman_rubin",
    "grad_log_likelihood",
    "gradient_ascent",
    "kdpp_log_likelihood",
    "kdpp_log_normalizer_bounds",
    "log_elementary_symmetric",
    "log_posterior",
    "log_posterior_bounds",
    "marginal_kernel",
    "match_to_ground",
    "moment_check",
    "moment_match_grid",
    "rw_mh",
    "sample_continuous_via_grid",
    "sample_dpp",
    "sample_kdpp",
    "slice_hyperrect",
    "slice_univariate",
    "square_grid",
    "trace_gaussian",
    "truncation_of",
]
