"""Maximum-likelihood estimation for discrete kernel families.

The DPP log likelihood has closed-form gradients: for each scalar parameter
the data term sums tr(L_A^{-1} dL_A) over the observed subsets and the
normalizer contributes -T tr((L+I)^{-1} dL), with dL supplied by the kernel
family as an explicit derivative matrix. For k-DPP models the normalizer
term differentiates log e_k of the spectrum through the eigenvalues, with
weights e_{k-1} of each eigenvalue's deleted spectrum; that path recomputes
the full decomposition per step and is intended for small ground sets.

Ascent runs on log-parameters (positivity without projection), with a
backtracking halving line search on top of the fixed step. The likelihood
is not concave, so results are local optima; multi-start is the caller's
job.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .kernels import log_elementary_symmetric
from .likelihood import ModelSpec, _PreparedDiscrete, _vec

__all__ = [
    "GradReport",
    "AscentResult",
    "grad_log_likelihood",
    "finite_difference_gradient",
    "gradient_ascent",
]

# eigen-perturbation k-DPP gradients recompute the full spectrum per step
KDPP_GRAD_LIMIT = 200

MAX_HALVINGS = 30


@dataclass(frozen=True)
class GradReport:
    """Log-likelihood value and its gradient on the positive scale."""

    param_names: tuple
    objective: float
    gradient: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gradient, dtype=float)
        if g.shape != (len(self.param_names),):
            raise ValueError("gradient must have one entry per parameter")
        if not np.all(np.isfinite(g)) or not math.isfinite(self.objective):
            raise FloatingPointError("objective or gradient is not finite")
        object.__setattr__(self, "gradient", g)


@dataclass(frozen=True)
class AscentResult:
    """Outcome of a gradient ascent run.

    trace_objective holds the objective at every retained iterate (starting
    point included) and is non-decreasing; trace_theta holds the matching
    parameter vectors. converged means the gradient-norm tolerance was met;
    otherwise message says what stopped the run.
    """

    param_names: tuple
    theta: np.ndarray
    objective: float
    gradient: np.ndarray
    trace_objective: np.ndarray
    trace_theta: np.ndarray
    converged: bool
    message: str

    @property
    def n_iters(self):
        return self.trace_objective.size - 1


def _as_model(model_or_family):
    if isinstance(model_or_family, ModelSpec):
        return model_or_family
    return ModelSpec(model_or_family, measure="dpp")


def _family_with_gradients(model):
    family = model.kernel
    if not getattr(family, "discrete", False):
        raise TypeError("gradients need a discrete kernel family")
    if not hasattr(family, "grad_matrices"):
        raise TypeError("%s provides no derivative matrices"
                        % type(family).__name__)
    return family


def _batch_inverses(subs, sample_ids):
    try:
        return np.linalg.inv(subs)
    except np.linalg.LinAlgError:
        for row, t in enumerate(sample_ids):
            try:
                np.linalg.inv(subs[row])
            except np.linalg.LinAlgError:
                raise np.linalg.LinAlgError(
                    "kernel submatrix of sample %d is singular" % int(t)
                ) from None
        raise


def _kdpp_normalizer_weights(L, k):
    """(log e_k, symmetric weight matrix B with tr(B dL) = d log e_k)."""
    w, v = np.linalg.eigh(L)
    w = np.maximum(w, 0.0)
    log_ek = log_elementary_symmetric(w, k)
    if log_ek == -np.inf:
        raise ValueError("e_k of the kernel spectrum is zero (rank < k)")
    weights = np.empty(w.size)
    for n in range(w.size):
        log_dn = log_elementary_symmetric(np.delete(w, n), k - 1)
        weights[n] = 0.0 if log_dn == -np.inf else math.exp(log_dn - log_ek)
    return log_ek, (v * weights) @ v.T


def _objective_and_gradient(theta_vec, prep, model):
    family = model.kernel
    L, dmats = family.grad_matrices(theta_vec)
    n_params = len(dmats)
    data_obj = 0.0
    grad = np.zeros(n_params)
    for s, (idx, ids) in sorted(prep.groups.items()):
        subs = prep.submatrices(L, s)
        sign, logdet = np.linalg.slogdet(subs)
        if np.any(sign <= 0.0):
            bad = int(ids[np.argmax(sign <= 0.0)])
            raise ValueError("kernel submatrix of sample %d is singular "
                             "or indefinite" % bad)
        data_obj += float(np.sum(logdet))
        inv = _batch_inverses(subs, ids)
        for p, dmat in enumerate(dmats):
            dsubs = dmat[idx[:, :, None], idx[:, None, :]]
            grad[p] += float(np.einsum("gij,gji->", inv, dsubs))
    if model.measure == "dpp":
        eye = np.eye(L.shape[0])
        cho = cho_factor(L + eye, lower=True)
        log_z = 2.0 * float(np.sum(np.log(np.diag(cho[0]))))
        inv_z = cho_solve(cho, eye)
        for p, dmat in enumerate(dmats):
            grad[p] -= prep.T * float(np.sum(inv_z * dmat))
    else:
        if L.shape[0] > KDPP_GRAD_LIMIT:
            raise ValueError("k-DPP gradients are limited to ground sets of "
                             "at most %d items" % KDPP_GRAD_LIMIT)
        log_z, weight_mat = _kdpp_normalizer_weights(L, model.k)
        for p, dmat in enumerate(dmats):
            grad[p] -= prep.T * float(np.sum(weight_mat * dmat))
    return data_obj - prep.T * log_z, grad


def _prepare_discrete(model, data):
    prep = _PreparedDiscrete(data, model.kernel.ground.n)
    if prep.degenerate:
        raise ValueError("a sample repeats an item; its kernel submatrix "
                         "is singular")
    if model.measure == "kdpp":
        bad = np.nonzero(prep.sizes != model.k)[0]
        if bad.size:
            raise ValueError("sample %d has %d points but k=%d"
                             % (int(bad[0]), int(prep.sizes[bad[0]]), model.k))
    return prep


def grad_log_likelihood(theta_vec, data, model_or_family):
    """Log likelihood and its exact gradient at theta.

    Accepts a discrete kernel family (treated as a DPP model) or a discrete
    ModelSpec. The gradient is with respect to the positive-scale
    parameters, in param_names order.
    """
    model = _as_model(model_or_family)
    family = _family_with_gradients(model)
    theta_vec = _vec(theta_vec, len(family.param_names))
    prep = _prepare_discrete(model, data)
    objective, gradient = _objective_and_gradient(theta_vec, prep, model)
    return GradReport(tuple(family.param_names), objective, gradient)


def finite_difference_gradient(objective, theta_vec, h=1e-5):
    """Central finite differences of a scalar function, one h per call."""
    theta_vec = np.asarray(theta_vec, dtype=float)
    out = np.empty(theta_vec.size)
    for i in range(theta_vec.size):
        hi = theta_vec.copy()
        lo = theta_vec.copy()
        hi[i] += h
        lo[i] -= h
        out[i] = (objective(hi) - objective(lo)) / (2.0 * h)
    return out


def gradient_ascent(theta0, data, model_or_family, step=0.1, max_iters=200,
                    tol=1e-5):
    """Backtracking gradient ascent of the log likelihood.

    Steps are taken on log-parameters (chain rule: the log-scale gradient
    is theta times the gradient), halving the step up to 30 times whenever
    the objective would decrease. Stops when the log-scale gradient norm
    drops below tol, the iteration cap is reached, or no halving improves
    the objective; the result is a local optimum either way.
    """
    model = _as_model(model_or_family)
    family = _family_with_gradients(model)
    theta = _vec(theta0, len(family.param_names)).copy()
    if np.any(theta <= 0.0):
        raise ValueError("theta0 must be positive")
    if step <= 0.0 or max_iters < 0 or tol < 0.0:
        raise ValueError("step must be positive, max_iters and tol non-negative")
    prep = _prepare_discrete(model, data)
    objective, gradient = _objective_and_gradient(theta, prep, model)
    trace_obj = [objective]
    trace_theta = [theta.copy()]
    converged = False
    message = "iteration cap reached"
    for _ in range(max_iters):
        x = np.log(theta)
        grad_x = theta * gradient
        norm = float(np.linalg.norm(grad_x))
        if norm < tol:
            converged = True
            message = "gradient norm below tolerance"
            break
        eta = step
        improved = False
        for _ in range(MAX_HALVINGS + 1):
            cand = np.exp(x + eta * grad_x)
            try:
                cand_obj, cand_grad = _objective_and_gradient(cand, prep, model)
            except (ValueError, np.linalg.LinAlgError):
                cand_obj = -np.inf
            if cand_obj > objective:
                improved = True
                break
            eta *= 0.5
        if not improved:
            message = ("no improving step after %d halvings; "
                       "treating the point as a local optimum" % MAX_HALVINGS)
            break
        theta, objective, gradient = cand, cand_obj, cand_grad
        trace_obj.append(objective)
        trace_theta.append(theta.copy())
    else:
        if float(np.linalg.norm(theta * gradient)) < tol:
            converged = True
            message = "gradient norm below tolerance"
    return AscentResult(tuple(family.param_names), theta, objective, gradient,
                        np.array(trace_obj), np.array(trace_theta),
                        converged, message)
