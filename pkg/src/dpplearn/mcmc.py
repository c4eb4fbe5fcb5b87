"""Posterior samplers over kernel parameters, exact and bound-driven.

All samplers walk log-parameter space; the targets from `likelihood` fold
the change-of-variables term in, so chains sample the posterior of the
positive parameters. Exact samplers (random-walk Metropolis, univariate
slice, hyperrectangle slice) call the target directly. The bounded variants
consume anytime lower/upper bounds instead of exact values, tightening only
as far as each accept/reject or in-slice decision requires; given the same
random stream they make the same decisions as their exact counterparts.

Chains record the positive-scale parameter draws (row 0 is the start
point), the sampler's target value at each state, and per-iteration
acceptance flags.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Chain",
    "BoundsUnresolvedError",
    "rw_mh",
    "slice_univariate",
    "slice_hyperrect",
    "bounded_mh",
    "bounded_slice",
    "autocorrelation",
    "gelman_rubin",
]


class BoundsUnresolvedError(RuntimeError):
    """Bounds could not be tightened enough to decide an MCMC step."""


@dataclass
class Chain:
    """One MCMC chain over positive kernel parameters.

    samples has n_iters + 1 rows, the first being the start point.
    log_post holds the sampler's target value at each state: the log
    posterior density of the log parameters (change-of-variables term
    included); bounded samplers store the midpoint of the final bounds.
    accepted[0] is always True.
    """

    param_names: tuple
    samples: np.ndarray
    log_post: np.ndarray
    accepted: np.ndarray
    seed: object = None
    settings: dict = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        self.log_post = np.asarray(self.log_post, dtype=float)
        self.accepted = np.asarray(self.accepted, dtype=bool)
        n = self.samples.shape[0]
        if self.log_post.shape != (n,) or self.accepted.shape != (n,):
            raise ValueError("samples, log_post and accepted disagree on length")
        if self.samples.ndim != 2 or self.samples.shape[1] != len(self.param_names):
            raise ValueError("samples must be (n, %d)" % len(self.param_names))

    @property
    def n_iters(self):
        return self.samples.shape[0] - 1

    @property
    def acceptance_rate(self):
        if self.n_iters == 0:
            return float("nan")
        return float(np.mean(self.accepted[1:]))

    def draws(self, burnin=0, thin=1):
        """Post-burn-in, thinned draws (the start point is never included)."""
        burnin = int(burnin)
        thin = int(thin)
        if burnin < 0 or thin < 1:
            raise ValueError("burnin must be >= 0 and thin >= 1")
        if burnin >= self.n_iters:
            raise ValueError("burnin %d leaves no draws out of %d iterations"
                             % (burnin, self.n_iters))
        return self.samples[1 + burnin::thin]

    def column(self, name):
        return self.samples[:, self.param_names.index(name)]


def _as_scales(value, p, name):
    arr = np.broadcast_to(np.asarray(value, dtype=float), (p,)).copy()
    if np.any(arr <= 0.0) or not np.all(np.isfinite(arr)):
        raise ValueError("%s must be positive and finite" % name)
    return arr


def _start_state(target, x0):
    x = np.array(x0, dtype=float).ravel()
    cur = float(target(x))
    if not math.isfinite(cur):
        raise ValueError("start point has zero posterior; pick another")
    return x, cur


def _param_names(target, p):
    names = getattr(target, "param_names", None)
    if names is None:
        names = tuple("x%d" % (d + 1) for d in range(p))
    return tuple(names)


def _to_theta(target, xs):
    if hasattr(target, "theta"):
        return target.theta(xs)
    return np.asarray(xs, dtype=float)


def rw_mh(target, x0, n_iters, rng, scales=0.1, seed=None):
    """Random-walk Metropolis with independent Gaussian proposals.

    Per iteration one P-vector of standard normals (scaled per dimension)
    and one uniform are drawn, in that order; the proposal is accepted when
    log(uniform) < min(0, proposed - current).
    """
    x, cur = _start_state(target, x0)
    p = x.size
    scales = _as_scales(scales, p, "scales")
    xs = np.empty((n_iters + 1, p))
    log_post = np.empty(n_iters + 1)
    accepted = np.zeros(n_iters + 1, dtype=bool)
    xs[0], log_post[0], accepted[0] = x, cur, True
    for i in range(1, n_iters + 1):
        prop = x + rng.standard_normal(p) * scales
        val = float(target(prop))
        logu = math.log(rng.random())
        if logu < min(0.0, val - cur):
            x, cur = prop, val
            accepted[i] = True
        xs[i], log_post[i] = x, cur
    return Chain(_param_names(target, p), _to_theta(target, xs), log_post,
                 accepted, seed=seed,
                 settings={"sampler": "mh", "scales": scales.tolist(),
                           "n_iters": int(n_iters)})


# safety cap on shrinkage steps; the interval provably shrinks onto the
# current point, so hitting this means the target is inconsistent
MAX_SHRINK = 1000


def _slice_axis(target, x, cur, d, width, rng, max_expansions):
    """One univariate slice update of coordinate d. Returns (x, cur)."""
    y = cur + math.log(rng.random())
    lo = x[d] - rng.random() * width
    hi = lo + width

    def level(value):
        z = x.copy()
        z[d] = value
        return float(target(z))

    j = 0
    while j < max_expansions and level(lo) >= y:
        lo -= width
        j += 1
    j = 0
    while j < max_expansions and level(hi) >= y:
        hi += width
        j += 1
    for _ in range(MAX_SHRINK):
        cand = lo + rng.random() * (hi - lo)
        val = level(cand)
        if val >= y:
            z = x.copy()
            z[d] = cand
            return z, val
        if cand < x[d]:
            lo = cand
        else:
            hi = cand
    raise RuntimeError("slice shrinkage failed to terminate")


def slice_univariate(target, x0, n_iters, rng, widths=1.0, max_expansions=64,
                     seed=None):
    """Slice sampling with stepping out, one coordinate at a time.

    Each coordinate update draws its level and interval offset, steps the
    interval out in units of its width while the endpoints stay in the
    slice, then shrinks toward the current point until a candidate lands in
    the slice. Slice updates never reject.
    """
    x, cur = _start_state(target, x0)
    p = x.size
    widths = _as_scales(widths, p, "widths")
    xs = np.empty((n_iters + 1, p))
    log_post = np.empty(n_iters + 1)
    xs[0], log_post[0] = x, cur
    for i in range(1, n_iters + 1):
        for d in range(p):
            x, cur = _slice_axis(target, x, cur, d, widths[d], rng,
                                 max_expansions)
        xs[i], log_post[i] = x, cur
    return Chain(_param_names(target, p), _to_theta(target, xs), log_post,
                 np.ones(n_iters + 1, dtype=bool), seed=seed,
                 settings={"sampler": "slice", "widths": widths.tolist(),
                           "n_iters": int(n_iters)})


def slice_hyperrect(target, x0, n_iters, rng, widths=1.0, max_expansions=64,
                    seed=None):
    """Slice sampling on axis-aligned hyperrectangles.

    Per iteration: draw the level, place a randomly offset rectangle around
    the current point, expand each face outward along its own axis while
    the face's axis point stays in the slice, then draw candidates from the
    rectangle, shrinking every dimension toward the current point on each
    rejection.
    """
    x, cur = _start_state(target, x0)
    p = x.size
    widths = _as_scales(widths, p, "widths")
    xs = np.empty((n_iters + 1, p))
    log_post = np.empty(n_iters + 1)
    xs[0], log_post[0] = x, cur
    for i in range(1, n_iters + 1):
        y = cur + math.log(rng.random())
        lo = x - rng.random(p) * widths
        hi = lo + widths
        for d in range(p):
            z = x.copy()
            j = 0
            z[d] = lo[d]
            while j < max_expansions and float(target(z)) >= y:
                lo[d] -= widths[d]
                z[d] = lo[d]
                j += 1
            j = 0
            z[d] = hi[d]
            while j < max_expansions and float(target(z)) >= y:
                hi[d] += widths[d]
                z[d] = hi[d]
                j += 1
        for _ in range(MAX_SHRINK):
            cand = lo + rng.random(p) * (hi - lo)
            val = float(target(cand))
            if val >= y:
                x, cur = cand, val
                break
            below = cand < x
            lo[below] = cand[below]
            hi[~below] = cand[~below]
        else:
            raise RuntimeError("slice shrinkage failed to terminate")
        xs[i], log_post[i] = x, cur
    return Chain(_param_names(target, p), _to_theta(target, xs), log_post,
                 np.ones(n_iters + 1, dtype=bool), seed=seed,
                 settings={"sampler": "slice-hyperrect",
                           "widths": widths.tolist(), "n_iters": int(n_iters)})


def _tighten_pair(a, b, context):
    """Tighten the wider of two bound evaluations; False when both are stuck."""
    first, second = (a, b) if (a.upper - a.lower) >= (b.upper - b.lower) else (b, a)
    if first.tighten() or second.tighten():
        return True
    raise BoundsUnresolvedError(
        "bounds stuck before deciding %s (eigenvalue counts %d and %d, gaps "
        "%.3e and %.3e); raise the tightening budget"
        % (context, a.count, b.count, a.upper - a.lower, b.upper - b.lower)
    )


def _bounded_start(target, x0):
    x = np.array(x0, dtype=float).ravel()
    ev = target.evaluate(x)
    if ev.upper == -np.inf:
        raise ValueError("start point has zero posterior; pick another")
    return x, ev


def _midpoint(ev):
    if ev.lower == ev.upper:
        return ev.lower
    if not (math.isfinite(ev.lower) and math.isfinite(ev.upper)):
        return ev.lower if math.isfinite(ev.lower) else ev.upper
    return 0.5 * (ev.lower + ev.upper)


def bounded_mh(target, x0, n_iters, rng, scales=0.1, seed=None):
    """Random-walk Metropolis driven by posterior bounds.

    Draws exactly the random numbers rw_mh draws, in the same order. Each
    decision compares log(uniform) against bounds on the log acceptance
    ratio: accept once it clears min(0, lower ratio), reject once it
    reaches min(0, upper ratio), and tighten the wider evaluation until one
    of the two holds. With collapsed bounds both tests together are
    exhaustive, so every step terminates or raises BoundsUnresolvedError.
    """
    x, ev_cur = _bounded_start(target, x0)
    p = x.size
    scales = _as_scales(scales, p, "scales")
    xs = np.empty((n_iters + 1, p))
    log_post = np.empty(n_iters + 1)
    accepted = np.zeros(n_iters + 1, dtype=bool)
    xs[0], log_post[0], accepted[0] = x, _midpoint(ev_cur), True
    for i in range(1, n_iters + 1):
        prop = x + rng.standard_normal(p) * scales
        ev_prop = target.evaluate(prop)
        logu = math.log(rng.random())
        while True:
            if logu < min(0.0, ev_prop.lower - ev_cur.upper):
                x, ev_cur = prop, ev_prop
                accepted[i] = True
                break
            if logu >= min(0.0, ev_prop.upper - ev_cur.lower):
                break
            _tighten_pair(ev_cur, ev_prop, "step %d" % i)
        xs[i], log_post[i] = x, _midpoint(ev_cur)
    return Chain(_param_names(target, p), _to_theta(target, xs), log_post,
                 accepted, seed=seed,
                 settings={"sampler": "bounded-mh", "scales": scales.tolist(),
                           "n_iters": int(n_iters)})


class _BoundedSlice:
    """In-slice tests for bounded slice sampling.

    The level is carried as log(v) relative to the current point: a
    candidate z is in the slice iff t(z) - t(x) >= log v. Sure-in and
    sure-out tests use the bound pairs of both points and tighten the wider
    evaluation whenever neither test decides.
    """

    def __init__(self, target, ev_cur, logv, context):
        self.target = target
        self.ev_cur = ev_cur
        self.logv = logv
        self.context = context

    def evaluate(self, z):
        return self.target.evaluate(z)

    def contains(self, ev_z):
        while True:
            if ev_z.lower - self.ev_cur.upper >= self.logv:
                return True
            if ev_z.upper - self.ev_cur.lower < self.logv:
                return False
            _tighten_pair(self.ev_cur, ev_z, self.context)


def bounded_slice(target, x0, n_iters, rng, widths=1.0, max_expansions=64,
                  seed=None):
    """Univariate slice sampling driven by posterior bounds.

    Mirrors slice_univariate decision for decision (same random stream,
    same stepping out and shrinkage); in-slice tests compare bound pairs
    and tighten until they decide.
    """
    x, ev_cur = _bounded_start(target, x0)
    p = x.size
    widths = _as_scales(widths, p, "widths")
    xs = np.empty((n_iters + 1, p))
    log_post = np.empty(n_iters + 1)
    xs[0], log_post[0] = x, _midpoint(ev_cur)
    for i in range(1, n_iters + 1):
        for d in range(p):
            logv = math.log(rng.random())
            state = _BoundedSlice(target, ev_cur, logv,
                                  "step %d coordinate %d" % (i, d))
            width = widths[d]
            lo = x[d] - rng.random() * width
            hi = lo + width

            def at(value):
                z = x.copy()
                z[d] = value
                return z

            j = 0
            while j < max_expansions and state.contains(state.evaluate(at(lo))):
                lo -= width
                j += 1
            j = 0
            while j < max_expansions and state.contains(state.evaluate(at(hi))):
                hi += width
                j += 1
            for _ in range(MAX_SHRINK):
                cand = lo + rng.random() * (hi - lo)
                z = at(cand)
                ev_z = state.evaluate(z)
                if state.contains(ev_z):
                    x, ev_cur = z, ev_z
                    break
                if cand < x[d]:
                    lo = cand
                else:
                    hi = cand
            else:
                raise RuntimeError("slice shrinkage failed to terminate")
        xs[i], log_post[i] = x, _midpoint(ev_cur)
    return Chain(_param_names(target, p), _to_theta(target, xs), log_post,
                 np.ones(n_iters + 1, dtype=bool), seed=seed,
                 settings={"sampler": "bounded-slice",
                           "widths": widths.tolist(), "n_iters": int(n_iters)})


def autocorrelation(series, max_lag=None):
    """Biased sample autocorrelation of a scalar series, lags 0..max_lag.

    Covariances are normalized by the series length at every lag, which
    keeps the estimates positive semidefinite as a sequence. A constant
    series has no autocorrelation structure; it yields [1, 0, 0, ...] with
    a warning.
    """
    x = np.asarray(series, dtype=float).ravel()
    n = x.size
    if n < 2:
        raise ValueError("need at least 2 observations")
    if max_lag is None:
        max_lag = min(n - 1, 200)
    max_lag = int(max_lag)
    if not 0 <= max_lag < n:
        raise ValueError("max_lag must lie in [0, len(series))")
    centered = x - x.mean()
    c0 = float(np.dot(centered, centered)) / n
    if c0 == 0.0:
        warnings.warn("constant series has undefined autocorrelation")
        out = np.zeros(max_lag + 1)
        out[0] = 1.0
        return out
    full = np.correlate(centered, centered, mode="full")[n - 1:n + max_lag]
    return full / (n * c0)


def gelman_rubin(chains, burnin=0, thin=1):
    """Potential scale reduction factor per parameter across chains.

    Uses the within-chain variance W and between-chain variance B of the
    post-burn-in draws: sqrt(((n-1)/n W + B/n) / W). Values near 1 indicate
    the chains have mixed. Chains are truncated to a common length.
    """
    if len(chains) < 2:
        raise ValueError("need at least 2 chains")
    names = chains[0].param_names
    if any(c.param_names != names for c in chains):
        raise ValueError("chains disagree on parameters")
    draws = [c.draws(burnin, thin) for c in chains]
    n = min(d.shape[0] for d in draws)
    if n < 2:
        raise ValueError("need at least 2 draws per chain after burn-in")
    stacked = np.stack([d[:n] for d in draws])          # (m, n, P)
    means = stacked.mean(axis=1)                        # (m, P)
    within = stacked.var(axis=1, ddof=1).mean(axis=0)   # (P,)
    between = n * means.var(axis=0, ddof=1)             # (P,)
    var_hat = (n - 1) / n * within + between / n
    out = np.empty(len(names))
    for j in range(len(names)):
        if within[j] == 0.0:
            if between[j] == 0.0:
                warnings.warn("parameter %s is constant across all chains"
                              % names[j])
                out[j] = 1.0
            else:
                warnings.warn("parameter %s has zero within-chain variance"
                              % names[j])
                out[j] = np.inf
        else:
            out[j] = math.sqrt(var_hat[j] / within[j])
    return out
