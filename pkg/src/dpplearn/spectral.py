"""Anytime truncation bounds on DPP and k-DPP log normalizers.

Given the top M eigenvalues of a PSD operator plus its trace, the DPP
normalizer prod_n (1 + lam_n) and the k-DPP normalizer e_k(lam) are
bracketed from both sides:

  product:   lower = sum_{n<=M} log(1 + lam_n)
             upper = lower + (trace - sum_{n<=M} lam_n)
  e_k:       lower = log e_k(lam_{1..M})
             upper = log sum_{j=0..k} gap^j / j! * e_{k-j}(lam_{1..M}),
                     gap = trace - sum_{n<=M} lam_n

Both pairs collapse to the exact value when the truncation exhausts the
spectrum. All arithmetic stays in the log domain.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.special import gammaln, logsumexp

from .kernels import DiscreteKernel, GaussianSpectrum, log_elementary_symmetric_row

__all__ = [
    "EigenTruncation",
    "NormalizerBounds",
    "truncation_of",
    "tighten",
    "dpp_log_normalizer_bounds",
    "kdpp_log_normalizer_bounds",
]

# a truncation whose eigenvalue sum exceeds the trace by more than this
# relative tolerance is inconsistent
TRACE_TOL = 1e-8

# default truncation size at which tightening schedules start
START_COUNT = 8


@dataclass(frozen=True)
class EigenTruncation:
    """The top `count` eigenvalues of a spectrum plus its exact trace.

    `exact` marks an exhausted spectrum (no unseen tail), in which case the
    bounds built from this truncation coincide. `source` (a DiscreteKernel
    or GaussianSpectrum) lets tighten() extend the truncation.
    """

    lambdas: np.ndarray
    trace: float
    exact: bool = False
    source: object = None

    def __post_init__(self):
        lams = np.asarray(self.lambdas, dtype=float)
        if lams.ndim != 1:
            raise ValueError("lambdas must be 1-d")
        if np.any(np.diff(lams) > 0.0):
            raise ValueError("lambdas must be non-increasing")
        if lams.size and (not np.all(np.isfinite(lams)) or lams[-1] < 0.0):
            raise ValueError("lambdas must be finite and non-negative")
        object.__setattr__(self, "lambdas", lams)
        object.__setattr__(self, "trace", float(self.trace))
        if self.trace < 0.0 or not np.isfinite(self.trace):
            raise ValueError("trace must be finite and non-negative")
        if float(np.sum(lams)) > self.trace * (1.0 + TRACE_TOL) + 1e-300:
            raise ValueError(
                "inconsistent truncation: eigenvalue sum %.6e exceeds trace %.6e"
                % (float(np.sum(lams)), self.trace)
            )

    @property
    def count(self):
        return self.lambdas.size

    @property
    def tail_gap(self):
        """Upper bound on the unseen eigenvalue mass, trace - sum(lambdas)."""
        if self.exact:
            return 0.0
        return max(self.trace - float(np.sum(self.lambdas)), 0.0)


def truncation_of(source, count):
    """Truncation holding the top `count` eigenvalues of a spectrum source.

    source is a DiscreteKernel or a GaussianSpectrum (anything exposing the
    same small surface works).
    """
    if isinstance(source, DiscreteKernel):
        count = min(int(count), source.n)
        lams = source.top_eigenvalues(count)
        return EigenTruncation(lams, source.trace, exact=count >= source.n,
                               source=source)
    if isinstance(source, GaussianSpectrum):
        lams = source.values(count)
        exact = source.exhausted and lams.size < count
        return EigenTruncation(lams, source.trace, exact=exact, source=source)
    raise TypeError("unsupported spectrum source: %r" % type(source).__name__)


def tighten(trunc, factor=2, min_count=START_COUNT):
    """A tighter truncation from the same source (count grows by `factor`).

    An exact truncation is returned unchanged. Without a source to extend
    from, tightening is impossible and a ValueError is raised.
    """
    if trunc.exact:
        return trunc
    if trunc.source is None:
        raise ValueError("truncation has no source to extend from")
    new_count = max(int(min_count), int(factor) * trunc.count)
    if new_count <= trunc.count:
        new_count = trunc.count + 1
    return truncation_of(trunc.source, new_count)


@dataclass(frozen=True)
class NormalizerBounds:
    """Log-domain lower/upper bounds on a normalizer, from `count` eigenvalues.

    log_upper is always finite; log_lower can be -inf only for a k-DPP
    truncation holding fewer than k eigenvalues (e_k of fewer than k values
    is exactly zero).
    """

    log_lower: float
    log_upper: float
    count: int

    def __post_init__(self):
        if np.isnan(self.log_lower) or np.isnan(self.log_upper):
            raise ValueError("bounds must not be NaN")
        if not np.isfinite(self.log_upper):
            raise ValueError("upper bound must be finite")
        if self.log_lower > self.log_upper + 1e-12:
            raise ValueError("lower bound %.6e exceeds upper bound %.6e"
                             % (self.log_lower, self.log_upper))

    @property
    def gap(self):
        return self.log_upper - self.log_lower


def dpp_log_normalizer_bounds(trunc):
    """Bounds on log prod_n (1 + lam_n) from a truncation."""
    lower = float(np.sum(np.log1p(trunc.lambdas)))
    upper = lower + trunc.tail_gap
    return NormalizerBounds(lower, upper, trunc.count)


def kdpp_log_normalizer_bounds(trunc, k):
    """Bounds on log e_k(lam) from a truncation.

    The upper bound spreads the unseen tail mass over up to k extra slots:
    each batch of j tail eigenvalues contributes at most gap^j / j! times
    e_{k-j} of the seen ones.
    """
    k = int(k)
    if k < 0:
        raise ValueError("k must be >= 0")
    log_rows = log_elementary_symmetric_row(trunc.lambdas, k)
    lower = float(log_rows[k])
    gap = trunc.tail_gap
    if gap == 0.0:
        if not np.isfinite(lower):
            raise ValueError("e_%d of this spectrum is exactly zero "
                             "(k exceeds the effective rank)" % k)
        return NormalizerBounds(lower, lower, trunc.count)
    js = np.arange(k + 1)
    with np.errstate(divide="ignore"):
        log_gap = np.log(gap)
    terms = js * log_gap - gammaln(js + 1) + log_rows[::-1]
    upper = float(logsumexp(terms))
    return NormalizerBounds(lower, upper, trunc.count)
