"""Likelihoods, priors and posteriors for DPP and k-DPP models.

A model couples a parametrized kernel family with a measure type (DPP or
k-DPP with fixed cardinality k) and independent inverse-gamma priors on the
positive kernel parameters. Discrete families own a fixed ground set and
produce explicit matrices; the continuous Gaussian family works from its
closed-form spectrum, where the normalizer is either truncated under a
trace-gap rule or bracketed by anytime bounds.

MCMC runs on log-parameters. The target adapters at the bottom fold the
change-of-variables term into the target so that chains sample the
posterior of the positive parameters themselves.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .kernels import (
    DiscreteKernel,
    GaussianSpectrum,
    GaussianTheta,
    log_elementary_symmetric,
)
from .linalg import batch_chol_logdet, chol_logdet
from . import spectral
from .spectral import (
    EigenTruncation,
    dpp_log_normalizer_bounds,
    kdpp_log_normalizer_bounds,
    truncation_of,
)

__all__ = [
    "InvGammaPrior",
    "DEFAULT_PRIOR",
    "InvalidParameters",
    "DiscreteGaussianFamily",
    "PolynomialFamily",
    "FeatureKernelFamily",
    "ContinuousGaussianFamily",
    "ModelSpec",
    "match_to_ground",
    "dpp_log_likelihood",
    "kdpp_log_likelihood",
    "log_posterior",
    "log_posterior_bounds",
    "LogPosteriorBounds",
    "LogPosteriorTarget",
    "BoundedLogPosteriorTarget",
]

# default truncation accuracy for continuous normalizers: enumerate until the
# unseen eigenvalue mass is below this fraction of the trace
REL_TRACE_GAP = 1e-8

MAX_EIGENVALUES = 2 ** 20


class InvalidParameters(ValueError):
    """Parameter vector outside the kernel family's domain."""


@dataclass(frozen=True)
class InvGammaPrior:
    """Inverse-gamma prior on a positive scalar parameter.

    Unnormalized log density: -(shape + 1) log x - scale / x. The default
    (0.001, 0.001) is nearly flat on the log scale over many decades.
    """

    shape: float = 0.001
    scale: float = 0.001

    def __post_init__(self):
        if self.shape <= 0.0 or self.scale <= 0.0:
            raise ValueError("shape and scale must be positive")

    def log_density(self, x):
        if x <= 0.0 or not math.isfinite(x):
            return -np.inf
        return -(self.shape + 1.0) * math.log(x) - self.scale / x


DEFAULT_PRIOR = InvGammaPrior()


def _vec(theta_vec, size, name="theta"):
    v = np.atleast_1d(np.asarray(theta_vec, dtype=float))
    if v.shape != (size,):
        raise ValueError("%s must have %d entries, got shape %s"
                         % (name, size, v.shape))
    return v


class DiscreteGaussianFamily:
    """Gaussian quality/similarity kernels over a fixed coordinate ground set.

    Parameters are the diagonals of the quality and similarity scale
    matrices (quality_1..quality_D then similarity_1..similarity_D), or the
    similarity diagonal alone when learn_quality=False (uniform quality).
    """

    # precompute the per-dimension pairwise matrices up to this many items
    PRECOMPUTE_LIMIT = 1000

    def __init__(self, ground, learn_quality=True):
        if ground.items is None:
            raise ValueError("this family needs item coordinates")
        self.ground = ground
        self.learn_quality = bool(learn_quality)
        self.discrete = True
        pts = ground.items
        self._dim = pts.shape[1]
        dims = range(self._dim)
        if learn_quality:
            self.param_names = tuple(["quality_%d" % (d + 1) for d in dims]
                                     + ["similarity_%d" % (d + 1) for d in dims])
        else:
            self.param_names = tuple("similarity_%d" % (d + 1) for d in dims)
        if ground.n <= self.PRECOMPUTE_LIMIT:
            self._sq = np.stack([pts[:, d, None] ** 2 + pts[None, :, d] ** 2
                                 for d in dims])
            self._dd = np.stack([(pts[:, d, None] - pts[None, :, d]) ** 2
                                 for d in dims])
        else:
            self._sq = None
            self._dd = None

    def _pair_matrices(self):
        if self._sq is not None:
            return self._sq, self._dd
        pts = self.ground.items
        sq = np.stack([pts[:, d, None] ** 2 + pts[None, :, d] ** 2
                       for d in range(self._dim)])
        dd = np.stack([(pts[:, d, None] - pts[None, :, d]) ** 2
                       for d in range(self._dim)])
        return sq, dd

    def split(self, theta_vec):
        v = _vec(theta_vec, len(self.param_names))
        if np.any(v <= 0.0) or not np.all(np.isfinite(v)):
            raise InvalidParameters("scale parameters must be positive and finite")
        if self.learn_quality:
            return v[:self._dim], v[self._dim:]
        return None, v

    def build(self, theta_vec):
        quality, similarity = self.split(theta_vec)
        sq, dd = self._pair_matrices()
        expo = np.tensordot(1.0 / (2.0 * similarity), dd, axes=(0, 0))
        if quality is not None:
            expo += np.tensordot(1.0 / (2.0 * quality), sq, axes=(0, 0))
        return np.exp(-expo)

    def grad_matrices(self, theta_vec):
        """(L, [dL/dparam in param_names order]).

        The derivative with respect to a quality scale q_d is
        L * (x_id^2 + x_jd^2) / (2 q_d^2); with respect to a similarity
        scale s_d it is L * (x_id - x_jd)^2 / (2 s_d^2).
        """
        quality, similarity = self.split(theta_vec)
        sq, dd = self._pair_matrices()
        L = self.build(theta_vec)
        grads = []
        if quality is not None:
            for d in range(self._dim):
                grads.append(L * sq[d] / (2.0 * quality[d] ** 2))
        for d in range(self._dim):
            grads.append(L * dd[d] / (2.0 * similarity[d] ** 2))
        return L, grads


class PolynomialFamily:
    """Polynomial kernels (x_i . x_j + offset) ** exponent on a ground set.

    Both parameters are kept positive (they are learned on the log scale);
    the base must stay positive everywhere for the kernel and its exponent
    gradient to be defined.
    """

    param_names = ("offset", "exponent")

    def __init__(self, ground):
        if ground.items is None:
            raise ValueError("this family needs item coordinates")
        self.ground = ground
        self.discrete = True
        self._gram = ground.items @ ground.items.T

    def _base(self, theta_vec):
        v = _vec(theta_vec, 2)
        if np.any(v <= 0.0) or not np.all(np.isfinite(v)):
            raise InvalidParameters("offset and exponent must be positive")
        base = self._gram + v[0]
        if np.min(base) <= 0.0:
            raise InvalidParameters("kernel base has non-positive entries")
        return base, v[1]

    def build(self, theta_vec):
        base, expo = self._base(theta_vec)
        return base ** expo

    def grad_matrices(self, theta_vec):
        base, expo = self._base(theta_vec)
        L = base ** expo
        d_offset = expo * base ** (expo - 1.0)
        d_expo = L * np.log(base)
        return L, [d_offset, d_expo]


class FeatureKernelFamily:
    """Feature-block kernels exp{-sum_b ||f_i^b - f_j^b||^2 / sigma_b}.

    One positive scale per feature block, ordered by block name.
    """

    def __init__(self, ground, normalize=True):
        if ground.features is None:
            raise ValueError("this family needs feature blocks")
        from .kernels import normalize_features

        self.ground = ground
        self.discrete = True
        feats = normalize_features(ground.features) if normalize else ground.features
        self.block_names = tuple(sorted(feats))
        self.param_names = tuple("sigma_%s" % b for b in self.block_names)
        self._d2 = []
        for name in self.block_names:
            block = feats[name]
            sq = np.sum(block * block, axis=1)
            d2 = sq[:, None] + sq[None, :] - 2.0 * block @ block.T
            np.maximum(d2, 0.0, out=d2)
            np.fill_diagonal(d2, 0.0)
            self._d2.append(d2)

    def build(self, theta_vec):
        v = _vec(theta_vec, len(self.param_names))
        if np.any(v <= 0.0) or not np.all(np.isfinite(v)):
            raise InvalidParameters("block scales must be positive")
        expo = np.zeros_like(self._d2[0])
        for d2, sigma in zip(self._d2, v):
            expo += d2 / sigma
        return np.exp(-expo)


class ContinuousGaussianFamily:
    """The continuous Gaussian quality/similarity family on R^dim.

    Parameters: total mass alpha, quality scales rho, similarity scales
    sigma. With isotropic=True a single rho and sigma are shared across
    dimensions.
    """

    def __init__(self, dim, isotropic=True):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.dim = int(dim)
        self.isotropic = bool(isotropic)
        self.discrete = False
        if isotropic:
            self.param_names = ("alpha", "rho", "sigma")
        else:
            self.param_names = tuple(
                ["alpha"]
                + ["rho_%d" % (d + 1) for d in range(dim)]
                + ["sigma_%d" % (d + 1) for d in range(dim)]
            )

    def theta(self, theta_vec):
        v = _vec(theta_vec, len(self.param_names))
        if np.any(v <= 0.0) or not np.all(np.isfinite(v)):
            raise InvalidParameters("alpha, rho, sigma must be positive")
        if self.isotropic:
            return GaussianTheta(v[0], np.repeat(v[1], self.dim),
                                 np.repeat(v[2], self.dim))
        return GaussianTheta(v[0], v[1:1 + self.dim], v[1 + self.dim:])

    def vec_from_theta(self, theta):
        if self.isotropic:
            return np.array([theta.alpha, theta.rho[0], theta.sigma[0]])
        return np.concatenate([[theta.alpha], theta.rho, theta.sigma])

    def spectrum(self, theta_vec):
        return GaussianSpectrum(self.theta(theta_vec))


class ModelSpec:
    """A kernel family plus measure type plus priors.

    measure is "dpp" or "kdpp"; k is required for (and only for) "kdpp".
    priors maps parameter names to InvGammaPrior; unnamed parameters get the
    weakly-informative default.
    """

    def __init__(self, kernel, measure="dpp", k=None, priors=None):
        if measure not in ("dpp", "kdpp"):
            raise ValueError("measure must be 'dpp' or 'kdpp'")
        if measure == "kdpp":
            if k is None or int(k) < 1:
                raise ValueError("kdpp models need k >= 1")
            k = int(k)
        elif k is not None:
            raise ValueError("k only applies to kdpp models")
        self.kernel = kernel
        self.measure = measure
        self.k = k
        priors = dict(priors or {})
        unknown = set(priors) - set(kernel.param_names)
        if unknown:
            raise ValueError("priors for unknown parameters: %s" % sorted(unknown))
        self.priors = {name: priors.get(name, DEFAULT_PRIOR)
                       for name in kernel.param_names}

    @property
    def param_names(self):
        return self.kernel.param_names

    @property
    def discrete(self):
        return self.kernel.discrete

    def log_prior(self, theta_vec):
        v = _vec(theta_vec, len(self.param_names))
        total = 0.0
        for name, x in zip(self.param_names, v):
            total += self.priors[name].log_density(float(x))
            if total == -np.inf:
                return -np.inf
        return total

    def log_likelihood(self, theta_vec, data):
        if self.measure == "dpp":
            return dpp_log_likelihood(theta_vec, data, self)
        return kdpp_log_likelihood(theta_vec, data, self)

    def log_posterior(self, theta_vec, data):
        return log_posterior(theta_vec, data, self)


def match_to_ground(ground, configs, tol=1e-8):
    """Map point configurations onto ground-set item indices.

    Every point must coincide with a ground item within `tol` (Euclidean);
    otherwise a ValueError names the offending sample.
    """
    from scipy.spatial import cKDTree

    tree = cKDTree(ground.items)
    out = []
    for t, config in enumerate(configs):
        pts = config.points if hasattr(config, "points") else np.asarray(config, float)
        if pts.size == 0:
            out.append(np.zeros(0, dtype=int))
            continue
        dist, idx = tree.query(pts)
        if np.any(dist > tol):
            bad = int(np.argmax(dist))
            raise ValueError(
                "sample %d point %s is not a ground-set item (distance %.3e)"
                % (t, pts[bad], float(np.max(dist)))
            )
        out.append(np.asarray(idx, dtype=int))
    return out


class _PreparedDiscrete:
    """Index data grouped by subset size for batched determinant work."""

    def __init__(self, data, n_items):
        self.T = len(data)
        self.sizes = np.zeros(self.T, dtype=int)
        self.degenerate = False
        groups = {}
        for t, idx in enumerate(data):
            idx = np.asarray(idx)
            if idx.size and not np.issubdtype(idx.dtype, np.integer):
                raise ValueError("discrete data must be integer index arrays; "
                                 "sample %d is %s" % (t, idx.dtype))
            idx = idx.astype(int).ravel()
            if idx.size and (idx.min() < 0 or idx.max() >= n_items):
                raise ValueError("sample %d indexes outside the ground set" % t)
            if np.unique(idx).size != idx.size:
                warnings.warn("sample %d repeats an item; its determinant is "
                              "zero and the likelihood is -inf" % t)
                self.degenerate = True
            self.sizes[t] = idx.size
            groups.setdefault(idx.size, []).append((t, idx))
        self.groups = {}
        for s, rows in groups.items():
            if s == 0:
                continue
            ids = np.array([t for t, _ in rows], dtype=int)
            idx = np.array([a for _, a in rows], dtype=int)
            self.groups[s] = (idx, ids)

    def submatrices(self, L, size):
        idx, _ = self.groups[size]
        return L[idx[:, :, None], idx[:, None, :]]

    def sum_logdet(self, L):
        """sum_t log det(L[A_t]) for an explicit kernel matrix."""
        if self.degenerate:
            return -np.inf
        total = 0.0
        for s in self.groups:
            total += float(np.sum(batch_chol_logdet(self.submatrices(L, s))))
        return total


class _PreparedContinuous:
    """Point configurations grouped by size, with pairwise differences cached."""

    def __init__(self, data, dim):
        self.dim = dim
        self.T = len(data)
        self.sizes = np.zeros(self.T, dtype=int)
        self.degenerate = False
        buckets = {}
        for t, config in enumerate(data):
            pts = config.points if hasattr(config, "points") else np.asarray(config, float)
            pts = np.asarray(pts, dtype=float)
            if pts.size == 0:
                pts = pts.reshape(0, dim)
            if pts.ndim != 2 or pts.shape[1] != dim:
                raise ValueError("sample %d must be an (n, %d) array" % (t, dim))
            n = pts.shape[0]
            if n > 1:
                d2 = np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=-1)
                d2 = d2 + np.eye(n)
                if np.min(d2) <= 0.0:
                    warnings.warn("sample %d repeats a point; its determinant "
                                  "is zero and the likelihood is -inf" % t)
                    self.degenerate = True
            self.sizes[t] = n
            buckets.setdefault(n, []).append(pts)
        self.groups = []
        for s, rows in buckets.items():
            if s == 0:
                continue
            stack = np.stack(rows)                       # (G, s, dim)
            sqsum = np.sum(stack * stack, axis=1)        # (G, dim)
            diff = stack[:, :, None, :] - stack[:, None, :, :]
            diffsq = diff * diff                         # (G, s, s, dim)
            self.groups.append((s, stack.shape[0], sqsum, diffsq))

    def sum_logdet(self, theta):
        """sum_t log det(L_theta[A_t]) for the continuous Gaussian kernel."""
        if self.degenerate:
            return -np.inf
        const = math.log(theta.alpha) - 0.5 * float(np.sum(np.log(np.pi * theta.rho)))
        inv_rho = 1.0 / theta.rho
        half_inv_sigma = 1.0 / (2.0 * theta.sigma)
        total = 0.0
        for s, g, sqsum, diffsq in self.groups:
            quality_part = s * const - sqsum @ inv_rho
            expo = diffsq @ half_inv_sigma
            sim = np.exp(-expo)
            total += float(np.sum(quality_part) + np.sum(batch_chol_logdet(sim)))
        return total


def _prepare(model, data):
    if model.discrete:
        return _PreparedDiscrete(data, model.kernel.ground.n)
    return _PreparedContinuous(data, model.kernel.dim)


def _continuous_log_normalizer(spectrum, rel_gap, max_count):
    count = spectrum.count_for_trace_gap(rel_gap, max_count=max_count)
    return float(np.sum(np.log1p(spectrum.values(count))))


def _dpp_loglik(theta_vec, prep, model, rel_gap, max_count):
    if model.discrete:
        L = model.kernel.build(theta_vec)
        data_part = prep.sum_logdet(L)
        if data_part == -np.inf:
            return -np.inf
        log_z = chol_logdet(L + np.eye(L.shape[0]))
        return data_part - prep.T * log_z
    theta = model.kernel.theta(theta_vec)
    data_part = prep.sum_logdet(theta)
    if data_part == -np.inf:
        return -np.inf
    log_z = _continuous_log_normalizer(GaussianSpectrum(theta), rel_gap, max_count)
    return data_part - prep.T * log_z


def _check_kdpp_sizes(prep, k):
    bad = np.nonzero(prep.sizes != k)[0]
    if bad.size:
        raise ValueError("sample %d has %d points but k=%d"
                         % (int(bad[0]), int(prep.sizes[bad[0]]), k))


def _kdpp_loglik(theta_vec, prep, model):
    if not model.discrete:
        raise ValueError(
            "continuous k-DPP normalizers have no exact finite form; use "
            "log_posterior_bounds or a bounded sampler"
        )
    _check_kdpp_sizes(prep, model.k)
    L = model.kernel.build(theta_vec)
    data_part = prep.sum_logdet(L)
    if data_part == -np.inf:
        return -np.inf
    lams = np.maximum(np.linalg.eigvalsh(L), 0.0)
    log_ek = log_elementary_symmetric(lams, model.k)
    if log_ek == -np.inf:
        raise ValueError("e_k of the kernel spectrum is zero (rank < k)")
    return data_part - prep.T * log_ek


def dpp_log_likelihood(theta_vec, data, model, rel_gap=REL_TRACE_GAP,
                       max_count=MAX_EIGENVALUES):
    """Log likelihood of point-set data under a DPP.

    sum_t log det(L[A_t]) - T log det(L + I). For continuous families the
    normalizer sums log(1 + lam) over a truncation chosen by the trace-gap
    rule, which makes it approximate (though far inside every tolerance used
    here); exact two-sided control is available via log_posterior_bounds.
    """
    prep = _prepare(model, data)
    return _dpp_loglik(theta_vec, prep, model, rel_gap, max_count)


def kdpp_log_likelihood(theta_vec, data, model):
    """Log likelihood under a k-DPP: sum_t log det(L[A_t]) - T log e_k.

    Every sample must have exactly k points. Only discrete families are
    supported exactly; continuous k-DPPs go through the bounds path.
    """
    prep = _prepare(model, data)
    return _kdpp_loglik(theta_vec, prep, model)


def log_posterior(theta_vec, data, model, rel_gap=REL_TRACE_GAP,
                  max_count=MAX_EIGENVALUES):
    """Unnormalized log posterior: log prior + log likelihood."""
    lp = model.log_prior(theta_vec)
    if lp == -np.inf:
        return -np.inf
    prep = _prepare(model, data)
    try:
        if model.measure == "dpp":
            ll = _dpp_loglik(theta_vec, prep, model, rel_gap, max_count)
        else:
            ll = _kdpp_loglik(theta_vec, prep, model)
    except InvalidParameters:
        return -np.inf
    return lp + ll


@dataclass(frozen=True)
class LogPosteriorBounds:
    """Two-sided bounds on an unnormalized log posterior."""

    log_lower: float
    log_upper: float
    truncation: EigenTruncation

    def __post_init__(self):
        if np.isnan(self.log_lower) or np.isnan(self.log_upper):
            raise ValueError("bounds must not be NaN")
        if self.log_lower > self.log_upper + 1e-12:
            raise ValueError("lower bound exceeds upper bound")


def _normalizer_bounds(trunc, model):
    if model.measure == "dpp":
        return dpp_log_normalizer_bounds(trunc)
    return kdpp_log_normalizer_bounds(trunc, model.k)


def log_posterior_bounds(theta_vec, data, model, trunc=None,
                         count=spectral.START_COUNT):
    """Bounds on the log posterior from a spectrum truncation.

    Only the normalizer is uncertain: the data determinants and the prior
    are exact, so the posterior bounds are the exact part minus T times the
    normalizer bounds (upper and lower swapped). Pass a truncation from an
    earlier call (possibly tightened) to reuse its spectrum.
    """
    prep = _prepare(model, data)
    if model.measure == "kdpp":
        _check_kdpp_sizes(prep, model.k)
    lp = model.log_prior(theta_vec)
    if trunc is None:
        source = (DiscreteKernel(None, model.kernel.build(theta_vec))
                  if model.discrete else model.kernel.spectrum(theta_vec))
        trunc = truncation_of(source, count)
    if lp == -np.inf:
        return LogPosteriorBounds(-np.inf, -np.inf, trunc)
    if model.discrete:
        data_part = prep.sum_logdet(trunc.source.matrix)
    else:
        data_part = prep.sum_logdet(model.kernel.theta(theta_vec))
    if data_part == -np.inf:
        return LogPosteriorBounds(-np.inf, -np.inf, trunc)
    z = _normalizer_bounds(trunc, model)
    exact_part = lp + data_part
    return LogPosteriorBounds(exact_part - prep.T * z.log_upper,
                              exact_part - prep.T * z.log_lower, trunc)


class LogPosteriorTarget:
    """Callable log posterior on log-parameter coordinates.

    The value at x is log posterior(exp(x)) + sum(x); the additive term is
    the change-of-variables factor, so MCMC on x samples the posterior of
    the positive parameters. Works with ModelSpec (fast prepared path) or
    any object exposing param_names, log_prior and log_likelihood.
    """

    def __init__(self, model, data, rel_gap=REL_TRACE_GAP,
                 max_count=MAX_EIGENVALUES):
        self.model = model
        self.data = data
        self.param_names = tuple(model.param_names)
        self._rel_gap = rel_gap
        self._max_count = max_count
        self._prep = _prepare(model, data) if isinstance(model, ModelSpec) else None

    def x0(self, theta_vec):
        v = _vec(theta_vec, len(self.param_names))
        if np.any(v <= 0.0):
            raise ValueError("starting parameters must be positive")
        return np.log(v)

    def theta(self, x):
        return np.exp(np.asarray(x, dtype=float))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        vec = np.exp(x)
        lp = self.model.log_prior(vec)
        if lp == -np.inf:
            return -np.inf
        try:
            if self._prep is not None:
                if self.model.measure == "dpp":
                    ll = _dpp_loglik(vec, self._prep, self.model,
                                     self._rel_gap, self._max_count)
                else:
                    ll = _kdpp_loglik(vec, self._prep, self.model)
            else:
                ll = self.model.log_likelihood(vec, self.data)
        except InvalidParameters:
            return -np.inf
        if ll == -np.inf:
            return -np.inf
        return lp + ll + float(np.sum(x))


class _BoundedEvaluation:
    """Anytime bounds on the log target at one point.

    lower/upper bracket the exact log target; tighten() extends the
    truncation (doubling its eigenvalue count) and returns False once no
    further progress is possible, with `exact` telling whether the bounds
    have actually collapsed.
    """

    def __init__(self, x, exact_part, n_data, trunc, model, max_count):
        self.x = np.asarray(x, dtype=float)
        self._exact_part = exact_part
        self._n_data = n_data
        self._trunc = trunc
        self._model = model
        self._max_count = max_count
        self.tighten_calls = 0
        self._refresh()

    def _refresh(self):
        if self._exact_part == -np.inf or self._trunc is None:
            self.lower = self.upper = self._exact_part
            return
        z = _normalizer_bounds(self._trunc, self._model)
        self.lower = self._exact_part - self._n_data * z.log_upper
        self.upper = self._exact_part - self._n_data * z.log_lower

    @property
    def exact(self):
        if self._exact_part == -np.inf or self._trunc is None:
            return True
        return self._trunc.exact or self.upper == self.lower

    @property
    def count(self):
        return 0 if self._trunc is None else self._trunc.count

    def tighten(self):
        if self._exact_part == -np.inf or self._trunc is None:
            return False
        if self._trunc.exact or self._trunc.count >= self._max_count:
            return False
        new_count = min(max(spectral.START_COUNT, 2 * self._trunc.count),
                        self._max_count)
        self._trunc = truncation_of(self._trunc.source, new_count)
        self.tighten_calls += 1
        self._refresh()
        return True


class BoundedLogPosteriorTarget:
    """Factory of anytime bound evaluations of the log posterior.

    evaluate(x) returns an object with lower/upper bounds on the log target
    at log-parameters x (change-of-variables term included, matching
    LogPosteriorTarget), a tighten() method, and an `exact` flag. The data
    determinants and the prior are exact; only the normalizer carries
    uncertainty.
    """

    def __init__(self, model, data, start_count=spectral.START_COUNT,
                 max_count=MAX_EIGENVALUES):
        if not isinstance(model, ModelSpec):
            raise TypeError("bounded targets need a ModelSpec")
        self.model = model
        self.param_names = tuple(model.param_names)
        self.start_count = int(start_count)
        self.max_count = int(max_count)
        self._prep = _prepare(model, data)
        if model.measure == "kdpp":
            _check_kdpp_sizes(self._prep, model.k)

    def x0(self, theta_vec):
        v = _vec(theta_vec, len(self.param_names))
        if np.any(v <= 0.0):
            raise ValueError("starting parameters must be positive")
        return np.log(v)

    def theta(self, x):
        return np.exp(np.asarray(x, dtype=float))

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        vec = np.exp(x)
        lp = self.model.log_prior(vec)
        if lp == -np.inf:
            return _BoundedEvaluation(x, -np.inf, self._prep.T, None,
                                      self.model, self.max_count)
        try:
            if self.model.discrete:
                kernel = DiscreteKernel(None, self.model.kernel.build(vec))
                data_part = self._prep.sum_logdet(kernel.matrix)
                source = kernel
            else:
                theta = self.model.kernel.theta(vec)
                data_part = self._prep.sum_logdet(theta)
                source = GaussianSpectrum(theta)
        except InvalidParameters:
            return _BoundedEvaluation(x, -np.inf, self._prep.T, None,
                                      self.model, self.max_count)
        if data_part == -np.inf:
            return _BoundedEvaluation(x, -np.inf, self._prep.T, None,
                                      self.model, self.max_count)
        exact_part = lp + data_part + float(np.sum(x))
        trunc = truncation_of(source, self.start_count)
        return _BoundedEvaluation(x, exact_part, self._prep.T, trunc,
                                  self.model, self.max_count)
