"""Theoretical point-process moments for model checking.

For a discrete kernel the marginal kernel K = L(I+L)^{-1} gives the m-th
spatial moment as sum_i x_i^m K_ii per coordinate. For the continuous
Gaussian model the same sums have closed forms in the eigenvalues and their
lattice indices; only orders 0, 2 and 4 are available there (odd orders
vanish by symmetry).

moment_check evaluates the theoretical moments at every retained posterior
draw and compares the resulting bands against the empirical moments of the
data, which is the model-criticism loop: data moments outside the band
indicate the fitted family cannot explain the data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .kernels import DiscreteKernel, GaussianSpectrum
from .linalg import chol_factor
from scipy.linalg import cho_solve

__all__ = [
    "MomentReport",
    "marginal_kernel",
    "discrete_moment",
    "continuous_gaussian_moments",
    "empirical_moment",
    "moment_check",
    "moment_match_grid",
]

# tail mass (relative to the trace) the continuous moment sums may ignore
TAIL_REL = 1e-6


def marginal_kernel(kernel):
    """Marginal kernel K = L(I+L)^{-1} of a discrete DPP.

    K is symmetric PSD with eigenvalues lam/(1+lam); its diagonal holds the
    item inclusion probabilities and its trace the expected cardinality.
    """
    L = kernel.matrix if isinstance(kernel, DiscreteKernel) else np.asarray(kernel, float)
    eye = np.eye(L.shape[0])
    factor, _ = chol_factor(L + eye)
    K = eye - cho_solve((factor, True), eye)
    return 0.5 * (K + K.T)


def discrete_moment(kernel, order, marginal=None):
    """Per-dimension m-th moment sum_i x_i^m K_ii of a discrete DPP.

    Order 0 gives the expected number of points (a scalar). Pass a
    precomputed marginal kernel to skip refactorizing.
    """
    order = int(order)
    if order < 0:
        raise ValueError("order must be >= 0")
    K = marginal_kernel(kernel) if marginal is None else marginal
    diag = np.diag(K)
    if order == 0:
        return float(np.sum(diag))
    if kernel.ground is None or kernel.ground.items is None:
        raise ValueError("spatial moments need item coordinates")
    return (kernel.ground.items ** order).T @ diag


def continuous_gaussian_moments(theta, orders, count=None,
                                max_count=2 ** 20):
    """Closed-form moments of the continuous Gaussian DPP.

    Returns {order: value}: a scalar for order 0 (the expected number of
    points), a per-dimension array otherwise. Odd orders are identically
    zero; even orders beyond 4 have no implemented closed form. The
    eigenvalue truncation is chosen by the trace-gap rule unless `count`
    is given, and a truncation whose tail exceeds TAIL_REL of the trace is
    rejected with the achieved tail reported.
    """
    orders = [int(m) for m in np.atleast_1d(np.asarray(orders, dtype=int))]
    for m in orders:
        if m < 0:
            raise ValueError("orders must be >= 0")
        if m % 2 == 0 and m > 4:
            raise ValueError("even orders beyond 4 have no closed form here")
    spectrum = GaussianSpectrum(theta)
    if count is None:
        count = spectrum.count_for_trace_gap(TAIL_REL, max_count=max_count)
    lams = spectrum.values(count)
    gap = theta.alpha - float(np.sum(lams))
    if gap > TAIL_REL * theta.alpha:
        raise ValueError(
            "truncation at %d eigenvalues leaves tail weight %.3e, above "
            "%.3e; raise count" % (count, gap, TAIL_REL * theta.alpha)
        )
    weights = lams / (1.0 + lams)
    indices = np.array(spectrum.indices(count), dtype=float)   # (M, D), 1-based
    beta_sq = np.sqrt(1.0 + 2.0 / theta.gamma)                 # (D,)
    scale = theta.rho / (2.0 * beta_sq)                        # per-dim variance
    out = {}
    for m in orders:
        if m == 0:
            out[m] = float(np.sum(weights))
        elif m % 2 == 1:
            out[m] = np.zeros(theta.dim)
        elif m == 2:
            out[m] = scale * (weights @ (2.0 * indices - 1.0))
        else:
            poly = 3.0 * (2.0 * indices * indices - 2.0 * indices + 1.0)
            out[m] = scale ** 2 * (weights @ poly)
    return out


def _as_point_configs(data, model=None):
    """Normalize data to a list of coordinate arrays."""
    configs = []
    for sample in data:
        pts = sample.points if hasattr(sample, "points") else np.asarray(sample)
        if model is not None and model.discrete:
            if pts.dtype.kind in "iu":
                pts = model.kernel.ground.items[pts.astype(int)]
        configs.append(np.asarray(pts, dtype=float))
    return configs


def empirical_moment(configs, order, return_se=False):
    """Empirical moment of point configurations, with optional MC error.

    The estimator averages sum_{x in A} x_d^m over configurations, matching
    the theoretical E[sum x^m]. Order 0 counts points. With return_se=True
    also returns the standard error of that average.
    """
    order = int(order)
    if order < 0:
        raise ValueError("order must be >= 0")
    if len(configs) == 0:
        raise ValueError("need at least one configuration")
    if order == 0:
        per = np.array([np.asarray(c).shape[0] for c in configs], dtype=float)
    else:
        widths = [np.asarray(c).shape[-1] for c in configs
                  if np.asarray(c).ndim == 2 and np.asarray(c).size]
        if not widths:
            raise ValueError("all configurations are empty; spatial moments "
                             "are undefined")
        per = np.array([np.sum(np.asarray(c, dtype=float) ** order, axis=0)
                        if np.asarray(c).size else np.zeros(widths[0])
                        for c in configs])
    value = per.mean(axis=0)
    if not return_se:
        return value
    se = per.std(axis=0, ddof=1) / math.sqrt(len(configs)) if len(configs) > 1 \
        else np.full_like(np.atleast_1d(value), np.nan, dtype=float)
    return value, se


@dataclass(frozen=True)
class MomentReport:
    """Theoretical-vs-empirical comparison of one moment component.

    dimension is None for order 0 (the cardinality moment is scalar).
    theoretical is the posterior median over the chain draws (or the single
    value when the chain has one draw); band_low/band_high bracket the
    central band; discrepancy = empirical - theoretical.
    """

    order: int
    dimension: object
    theoretical: float
    band_low: float
    band_high: float
    empirical: float
    discrepancy: float
    inside_band: bool


def _theoretical_rows(theta_vec, model, orders):
    if model.discrete:
        kernel = DiscreteKernel(model.kernel.ground, model.kernel.build(theta_vec))
        marg = marginal_kernel(kernel)
        return {m: discrete_moment(kernel, m, marginal=marg) for m in orders}
    return continuous_gaussian_moments(model.kernel.theta(theta_vec), orders)


def moment_check(chain, data, model, orders=(0, 2), burnin=0, thin=1,
                 band=0.95):
    """Compare posterior-implied moments with the data's empirical moments.

    Evaluates the theoretical moments at every retained draw of the chain,
    forms the central `band` interval per moment component, and reports it
    against the empirical moment of the data. Returns a list of
    MomentReport rows (order 0 first, then per dimension for higher
    orders).
    """
    if not 0.0 < band < 1.0:
        raise ValueError("band must lie in (0, 1)")
    draws = chain.draws(burnin, thin)
    if draws.shape[0] == 0:
        raise ValueError("chain has no retained draws")
    orders = [int(m) for m in orders]
    configs = _as_point_configs(data, model)
    lo_q, hi_q = 50.0 * (1.0 - band), 100.0 - 50.0 * (1.0 - band)
    per_draw = {m: [] for m in orders}
    for vec in draws:
        theo = _theoretical_rows(vec, model, orders)
        for m in orders:
            per_draw[m].append(np.atleast_1d(theo[m]))
    reports = []
    for m in orders:
        stack = np.stack(per_draw[m])              # (n_draws, width)
        med = np.median(stack, axis=0)
        lo = np.percentile(stack, lo_q, axis=0)
        hi = np.percentile(stack, hi_q, axis=0)
        emp = np.atleast_1d(empirical_moment(configs, m))
        for d in range(stack.shape[1]):
            dim = None if m == 0 else d
            reports.append(MomentReport(
                order=m, dimension=dim,
                theoretical=float(med[d]),
                band_low=float(lo[d]), band_high=float(hi[d]),
                empirical=float(emp[d]),
                discrepancy=float(emp[d] - med[d]),
                inside_band=bool(lo[d] <= emp[d] <= hi[d]),
            ))
    return reports


def moment_match_grid(model, data, grids, theta0, orders=(0, 2)):
    """Method-of-moments fit by exhaustive search over 1 or 2 parameters.

    grids maps parameter names to candidate value arrays; the remaining
    parameters stay at theta0. The score is the sum of squared relative
    discrepancies between theoretical and empirical moments over the given
    orders. Returns (best_theta, best_score, table) with one
    (theta, score) row per grid point.
    """
    if not 1 <= len(grids) <= 2:
        raise ValueError("grid search handles 1 or 2 parameters")
    names = tuple(model.param_names)
    for name in grids:
        if name not in names:
            raise ValueError("unknown parameter %r" % name)
    theta0 = np.asarray(theta0, dtype=float)
    if theta0.shape != (len(names),):
        raise ValueError("theta0 must have %d entries" % len(names))
    orders = [int(m) for m in orders]
    configs = _as_point_configs(data, model)
    emp = {m: np.atleast_1d(empirical_moment(configs, m)) for m in orders}
    grid_names = sorted(grids)
    table = []
    best = (np.inf, None)
    for values in product(*(np.asarray(grids[g], dtype=float) for g in grid_names)):
        theta = theta0.copy()
        for name, val in zip(grid_names, values):
            theta[names.index(name)] = val
        theo = _theoretical_rows(theta, model, orders)
        score = 0.0
        for m in orders:
            t = np.atleast_1d(theo[m])
            denom = np.maximum(np.abs(emp[m]), 1e-12)
            score += float(np.sum(((t - emp[m]) / denom) ** 2))
        table.append((theta, score))
        if score < best[0]:
            best = (score, theta)
    return best[1], best[0], table
