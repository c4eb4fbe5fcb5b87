"""Quality/similarity kernels for determinantal point processes.

Every kernel here factors as L(x, y) = q(x) k(x, y) q(y): a positive quality
function q sets how much mass an item carries and a unit-diagonal PSD
similarity k sets how strongly nearby items repel. Discrete ground sets give
explicit matrices. The continuous Gaussian family additionally has a closed
form for its operator spectrum: one eigenvalue per multi-index on a lattice,
decaying geometrically along every axis, which this module enumerates
largest-first and on demand.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .linalg import check_symmetric

__all__ = [
    "PointConfig",
    "GroundSet",
    "GaussianTheta",
    "DiscreteGaussianTheta",
    "PolynomialTheta",
    "DiscreteKernel",
    "KernelPSDError",
    "square_grid",
    "build_discrete_kernel",
    "build_feature_kernel",
    "build_polynomial_kernel",
    "gaussian_quality_log",
    "gaussian_kernel_matrix",
    "continuous_eigenvalue",
    "enumerate_eigenvalues",
    "trace_gaussian",
    "GaussianSpectrum",
    "elementary_symmetric",
    "log_elementary_symmetric",
    "log_elementary_symmetric_row",
]

# eigenvalue enumeration stops once log(lambda) falls below this (values
# underflow double precision shortly after)
LOG_UNDERFLOW = -740.0

# relative tolerance on the most negative eigenvalue allowed in a PSD check
PSD_REL_TOL = 1e-8


class KernelPSDError(ValueError):
    """A kernel matrix failed its positive-semidefiniteness check."""

    def __init__(self, message, min_eigenvalue):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


def _float_matrix(x, name, cols=None):
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 2:
        raise ValueError("%s must be a 2-d array, got ndim=%d" % (name, arr.ndim))
    if cols is not None and arr.shape[1] != cols:
        raise ValueError("%s must have %d columns, got %d" % (name, cols, arr.shape[1]))
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValueError("%s contains non-finite entries" % name)
    return arr


def _positive_vector(x, name, dim=None):
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim != 1:
        raise ValueError("%s must be a scalar or 1-d array" % name)
    if dim is not None and arr.size == 1 and dim > 1:
        arr = np.repeat(arr, dim)
    if dim is not None and arr.size != dim:
        raise ValueError("%s must have length %d, got %d" % (name, dim, arr.size))
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise ValueError("%s entries must be finite and positive" % name)
    return arr


@dataclass(frozen=True)
class PointConfig:
    """One observed point configuration (possibly empty) in R^dim."""

    points: np.ndarray

    def __post_init__(self):
        pts = _float_matrix(self.points, "points")
        object.__setattr__(self, "points", pts)

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]


@dataclass(frozen=True)
class GroundSet:
    """A finite ground set: item coordinates, feature blocks, or both.

    Parameters
    ----------
    items : (N, dim) array or None
        Spatial coordinates, required by the coordinate-based kernels.
    features : dict[str, (N, K_block) array] or None
        Named feature blocks, required by the feature kernel. All blocks
        must agree on N, and on items when both are given.
    """

    items: np.ndarray | None = None
    features: dict | None = None

    def __post_init__(self):
        items = self.items
        if items is not None:
            items = _float_matrix(items, "items")
            if np.unique(items, axis=0).shape[0] != items.shape[0]:
                raise ValueError("ground set items must be distinct")
            object.__setattr__(self, "items", items)
        feats = self.features
        if feats is not None:
            if not feats:
                raise ValueError("features dict must not be empty")
            clean = {}
            n_ref = None if items is None else items.shape[0]
            for name in sorted(feats):
                block = _float_matrix(feats[name], "feature block %r" % name)
                if n_ref is None:
                    n_ref = block.shape[0]
                elif block.shape[0] != n_ref:
                    raise ValueError("feature block %r has %d rows, expected %d"
                                     % (name, block.shape[0], n_ref))
                clean[name] = block
            object.__setattr__(self, "features", clean)
        if items is None and feats is None:
            raise ValueError("a ground set needs items or features")

    @property
    def n(self):
        if self.items is not None:
            return self.items.shape[0]
        return next(iter(self.features.values())).shape[0]

    @property
    def dim(self):
        if self.items is None:
            raise ValueError("this ground set has no coordinates")
        return self.items.shape[1]


def square_grid(n_side, spacing=1.0, dim=2, centered=True):
    """Regular lattice ground set with n_side points per axis.

    With centered=True the lattice is symmetric about the origin; otherwise
    its corner sits at 0.
    """
    if n_side < 1:
        raise ValueError("n_side must be >= 1")
    axis = spacing * np.arange(n_side, dtype=float)
    if centered:
        axis = axis - axis.mean()
    grids = np.meshgrid(*([axis] * dim), indexing="ij")
    items = np.column_stack([g.ravel() for g in grids])
    return GroundSet(items=items)


@dataclass(frozen=True)
class GaussianTheta:
    """Parameters of the continuous Gaussian quality/similarity model.

    alpha scales the total quality mass (it equals the operator trace), rho
    holds per-dimension squared length scales of the quality envelope, sigma
    the per-dimension squared length scales of the similarity. The ratio
    gamma = sigma / rho is a scale-free measure of repulsion strength.
    """

    alpha: float
    rho: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        alpha = float(self.alpha)
        if not math.isfinite(alpha) or alpha <= 0.0:
            raise ValueError("alpha must be finite and positive")
        rho = _positive_vector(self.rho, "rho")
        sigma = _positive_vector(self.sigma, "sigma", dim=rho.size)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "sigma", sigma)

    @property
    def dim(self):
        return self.rho.size

    @property
    def gamma(self):
        return self.sigma / self.rho


@dataclass(frozen=True)
class DiscreteGaussianTheta:
    """Parameters of the discrete Gaussian quality/similarity kernel.

    quality_diag[d] divides the squared d-th coordinate in the quality
    exponent; similarity_diag[d] divides the squared d-th coordinate
    difference in the similarity exponent. Both use the convention
    exp{-z/2 / scale}, so the diagonal entry plays the role of a variance.
    """

    quality_diag: np.ndarray
    similarity_diag: np.ndarray

    def __post_init__(self):
        q = _positive_vector(self.quality_diag, "quality_diag")
        s = _positive_vector(self.similarity_diag, "similarity_diag", dim=q.size)
        object.__setattr__(self, "quality_diag", q)
        object.__setattr__(self, "similarity_diag", s)

    @property
    def dim(self):
        return self.quality_diag.size


@dataclass(frozen=True)
class PolynomialTheta:
    """Parameters of the polynomial kernel (x . y + offset) ** exponent."""

    offset: float
    exponent: float

    def __post_init__(self):
        offset = float(self.offset)
        exponent = float(self.exponent)
        if not math.isfinite(offset):
            raise ValueError("offset must be finite")
        if not math.isfinite(exponent) or exponent <= 0.0:
            raise ValueError("exponent must be finite and positive")
        object.__setattr__(self, "offset", offset)
        object.__setattr__(self, "exponent", exponent)


class DiscreteKernel:
    """An explicit N x N DPP kernel over a discrete ground set.

    The matrix is checked for symmetry (and symmetrized to kill rounding
    noise). Pass check_psd=True to also verify the smallest eigenvalue is
    no more negative than -PSD_REL_TOL times the largest.

    The full eigendecomposition is computed lazily and cached; partial
    spectra use an iterative solver for large matrices.
    """

    # matrices up to this size always use the dense full decomposition
    DENSE_LIMIT = 512

    def __init__(self, ground, matrix, check_psd=False):
        matrix = np.asarray(matrix, dtype=float)
        check_symmetric(matrix, name="kernel matrix")
        if ground is not None and ground.n != matrix.shape[0]:
            raise ValueError("ground set has %d items but matrix is %s"
                             % (ground.n, matrix.shape))
        self.ground = ground
        self.matrix = 0.5 * (matrix + matrix.T)
        self._partial = None
        if check_psd:
            self.validate_psd()

    @property
    def n(self):
        return self.matrix.shape[0]

    @property
    def trace(self):
        return float(np.trace(self.matrix))

    def validate_psd(self):
        w = self.eigenvalues_raw
        top = max(float(w[-1]), 0.0)
        floor = -PSD_REL_TOL * max(top, 1e-300)
        if float(w[0]) < floor:
            raise KernelPSDError(
                "kernel matrix is not PSD: min eigenvalue %.6e" % float(w[0]),
                float(w[0]),
            )

    @cached_property
    def _eigh(self):
        w, v = np.linalg.eigh(self.matrix)
        return w, v

    @cached_property
    def eigenvalues_raw(self):
        """Eigenvalues ascending, as computed (may include tiny negatives)."""
        return self._eigh[0]

    @cached_property
    def eigenvalues(self):
        """Eigenvalues descending, clipped at zero (PSD rounding noise)."""
        return np.maximum(self.eigenvalues_raw[::-1], 0.0)

    def eigendecomposition(self):
        """(eigenvalues descending clipped, eigenvectors as columns)."""
        w, v = self._eigh
        return np.maximum(w[::-1], 0.0), v[:, ::-1]

    # iterative partial solves only pay off for a handful of extremal
    # eigenvalues; beyond this many the dense decomposition is faster
    PARTIAL_LIMIT = 64

    def top_eigenvalues(self, count):
        """The count largest eigenvalues, descending, clipped at zero.

        A Lanczos partial solve covers small counts on large matrices; every
        other case goes through the cached dense decomposition.
        """
        count = int(count)
        if count < 0:
            raise ValueError("count must be >= 0")
        count = min(count, self.n)
        if count == 0:
            return np.zeros(0)
        if (self.n <= self.DENSE_LIMIT or count > self.PARTIAL_LIMIT
                or "_eigh" in self.__dict__):
            return self.eigenvalues[:count]
        if self._partial is not None and self._partial.size >= count:
            return self._partial[:count]
        from scipy.sparse.linalg import eigsh

        try:
            w = eigsh(self.matrix, k=count, which="LA", return_eigenvectors=False)
            w = np.maximum(np.sort(w)[::-1], 0.0)
        except Exception:
            w = self.eigenvalues[:count]
        self._partial = w
        return w


def gaussian_quality_log(theta, points):
    """log q(x)^2 of the continuous Gaussian model at the given points.

    q(x)^2 = alpha * prod_d (pi rho_d)^{-1/2} exp{-x_d^2 / rho_d}, so the
    squared quality integrates to alpha over R^dim.
    """
    pts = _float_matrix(points, "points", cols=theta.dim)
    const = math.log(theta.alpha) - 0.5 * float(np.sum(np.log(np.pi * theta.rho)))
    return const - np.sum(pts * pts / theta.rho, axis=1)


def gaussian_kernel_matrix(theta, xa, xb=None):
    """Continuous Gaussian kernel matrix L(x, y) between point arrays.

    L(x, y) = q(x) q(y) * prod_d exp{-(x_d - y_d)^2 / (2 sigma_d)}.
    """
    xa = _float_matrix(xa, "xa", cols=theta.dim)
    symmetric = xb is None
    xb = xa if symmetric else _float_matrix(xb, "xb", cols=theta.dim)
    la = gaussian_quality_log(theta, xa)
    lb = la if symmetric else gaussian_quality_log(theta, xb)
    expo = 0.5 * la[:, None] + 0.5 * lb[None, :]
    for d in range(theta.dim):
        diff = xa[:, d, None] - xb[None, :, d]
        expo -= diff * diff / (2.0 * theta.sigma[d])
    return np.exp(expo)


def build_discrete_kernel(ground, theta, check_psd=False):
    """Discrete Gaussian quality/similarity kernel over a coordinate ground set.

    Entries are
        L_ij = exp{-x_i' Q^-1 x_i / 2} exp{-(x_i - x_j)' S^-1 (x_i - x_j) / 2}
               exp{-x_j' Q^-1 x_j / 2}
    with Q = diag(theta.quality_diag) and S = diag(theta.similarity_diag),
    so the diagonal is L_ii = q(x_i)^2.
    """
    if ground.items is None:
        raise ValueError("discrete Gaussian kernel needs item coordinates")
    pts = ground.items
    if pts.shape[1] != theta.dim:
        raise ValueError("theta has dim %d, ground set has dim %d"
                         % (theta.dim, pts.shape[1]))
    logq = -0.5 * np.sum(pts * pts / theta.quality_diag, axis=1)
    expo = logq[:, None] + logq[None, :]
    for d in range(theta.dim):
        diff = pts[:, d, None] - pts[None, :, d]
        expo -= diff * diff / (2.0 * theta.similarity_diag[d])
    return DiscreteKernel(ground, np.exp(expo), check_psd=check_psd)


def normalize_features(features):
    """L2-normalize each row within each feature block (zero rows kept)."""
    out = {}
    for name in sorted(features):
        block = np.asarray(features[name], dtype=float)
        norms = np.linalg.norm(block, axis=1, keepdims=True)
        safe = np.where(norms > 0.0, norms, 1.0)
        out[name] = block / safe
    return out


def build_feature_kernel(ground, sigmas, normalize=True, check_psd=False):
    """Feature-block kernel L_ij = exp{-sum_b ||f_i^b - f_j^b||^2 / sigma_b}.

    sigmas maps block name to a positive scale. Features are L2-normalized
    per row at ingestion unless normalize=False. The diagonal is exactly 1,
    and the matrix is PSD as a product of Gaussian RBF factors.
    """
    if ground.features is None:
        raise ValueError("feature kernel needs a ground set with features")
    feats = normalize_features(ground.features) if normalize else ground.features
    missing = set(feats) - set(sigmas)
    if missing:
        raise ValueError("missing sigma for feature blocks: %s" % sorted(missing))
    expo = np.zeros((ground.n, ground.n))
    for name in sorted(feats):
        sigma = float(sigmas[name])
        if not math.isfinite(sigma) or sigma <= 0.0:
            raise ValueError("sigma for block %r must be positive" % name)
        block = feats[name]
        sq = np.sum(block * block, axis=1)
        d2 = sq[:, None] + sq[None, :] - 2.0 * block @ block.T
        np.maximum(d2, 0.0, out=d2)
        expo -= d2 / sigma
    np.fill_diagonal(expo, 0.0)
    return DiscreteKernel(ground, np.exp(expo), check_psd=check_psd)


def build_polynomial_kernel(ground, theta, check_psd=True):
    """Polynomial kernel L_ij = (x_i . x_j + offset) ** exponent.

    The base x_i . x_j + offset must be positive everywhere (fractional
    exponents of non-positive bases are undefined, and the exponent
    gradient involves its logarithm). PSD is checked at build time by
    default; a violation raises KernelPSDError carrying the most negative
    eigenvalue.
    """
    if ground.items is None:
        raise ValueError("polynomial kernel needs item coordinates")
    base = ground.items @ ground.items.T + theta.offset
    if np.min(base) <= 0.0:
        raise ValueError(
            "polynomial kernel base has non-positive entries (min %.6e); "
            "increase the offset" % float(np.min(base))
        )
    return DiscreteKernel(ground, base ** theta.exponent, check_psd=check_psd)


def _per_dim_factors(theta):
    """Per-dimension (leading value c_d, decay ratio r_d) of the spectrum.

    Along axis d the operator contributes eigenvalue factors
    c_d * r_d^{m_d - 1} for m_d = 1, 2, ..., with
        c_d = sqrt(1 / ((beta_d^2 + 1) / 2 + 1 / (2 gamma_d))),
        r_d = 1 / (gamma_d (beta_d^2 + 1) + 1),
        beta_d = (1 + 2 / gamma_d)^{1/4},  gamma_d = sigma_d / rho_d.
    The factors satisfy c_d / (1 - r_d) = 1, so the total spectrum sums to
    alpha (the operator trace).
    """
    gamma = theta.gamma
    beta_sq = np.sqrt(1.0 + 2.0 / gamma)
    c = np.sqrt(1.0 / ((beta_sq + 1.0) / 2.0 + 1.0 / (2.0 * gamma)))
    r = 1.0 / (gamma * (beta_sq + 1.0) + 1.0)
    return c, r


def continuous_eigenvalue(multi_index, theta):
    """Closed-form operator eigenvalue at one lattice multi-index.

    multi_index has theta.dim components, each >= 1. Values decay
    geometrically in every component, so the largest eigenvalue sits at
    (1, ..., 1).
    """
    m = np.asarray(multi_index)
    if m.ndim != 1 or m.size != theta.dim:
        raise ValueError("multi-index must have %d components" % theta.dim)
    if not np.issubdtype(m.dtype, np.integer):
        if not np.all(m == np.floor(m)):
            raise ValueError("multi-index components must be integers")
        m = m.astype(int)
    if np.any(m < 1):
        raise ValueError("multi-index components must be >= 1")
    c, r = _per_dim_factors(theta)
    log_lam = math.log(theta.alpha) + float(np.sum(np.log(c) + (m - 1) * np.log(r)))
    return math.exp(log_lam)


def trace_gaussian(theta):
    """Trace of the continuous Gaussian operator; equals alpha exactly."""
    return float(theta.alpha)


class GaussianSpectrum:
    """Lazily enumerated spectrum of the continuous Gaussian operator.

    Eigenvalues come out largest-first. Log values are affine in the
    multi-index, so the top `count` are found by thresholding: pick a level
    tau, materialize the bounding box of the superlevel set (per-dim counts
    follow from the geometric decay), and lower tau until at least `count`
    lattice points clear it. A sub-box argument caps the box at
    2 * dim^dim * count points, so memory stays proportional to the
    request. Enumeration stops permanently once values underflow double
    precision; `exhausted` reports that state. Ties order by multi-index.
    """

    def __init__(self, theta):
        self.theta = theta
        c, r = _per_dim_factors(theta)
        self._log_c_sum = math.log(theta.alpha) + float(np.sum(np.log(c)))
        self._log_r = np.log(r)
        self._logs = np.empty(0)
        self._idx = np.empty((0, theta.dim), dtype=np.int64)
        self.exhausted = False

    @property
    def trace(self):
        return float(self.theta.alpha)

    @property
    def count_available(self):
        return int(self._logs.size)

    def _box(self, tau, count):
        # no dimension of the top-count set can pass index `count`: the
        # (1,..,m,..,1) chain alone outranks any such point count times
        counts = np.floor((tau - self._log_c_sum) / self._log_r).astype(int) + 1
        return np.clip(counts, 1, count)

    def _extend(self, count):
        count = int(count)
        if self.exhausted or self._logs.size >= count:
            return
        base = self._log_c_sum
        logr = self._log_r
        dim = int(logr.size)
        cap = 2 * dim ** dim * count + 1024
        # first guess: lattice volume of the superlevel set at level tau
        vol = (count * math.factorial(dim)
               * float(np.prod(-logr))) ** (1.0 / dim)
        while True:
            tau = max(base - vol, LOG_UNDERFLOW)
            counts = self._box(tau, count)
            while float(np.prod(counts.astype(float))) > cap:
                vol /= 1.25
                tau = max(base - vol, LOG_UNDERFLOW)
                counts = self._box(tau, count)
            # accumulate dims left to right so each value matches the
            # sequential sum base + t_1 + ... + t_dim bit for bit
            grid = base + np.arange(counts[0]) * logr[0]
            for d in range(1, dim):
                grid = np.add.outer(grid, np.arange(counts[d]) * logr[d])
            flat = grid.reshape(-1)
            keep = np.flatnonzero(flat >= max(tau, LOG_UNDERFLOW))
            if keep.size >= count or tau <= LOG_UNDERFLOW:
                break
            vol *= 1.5
        logs = flat[keep]
        cols = np.unravel_index(keep, tuple(int(k) for k in counts))
        keys = tuple(cols[d] for d in range(dim - 1, -1, -1)) + (-logs,)
        order = np.lexsort(keys)[:count]
        self._logs = logs[order]
        self._idx = np.column_stack([cols[d][order] for d in range(dim)]) + 1
        if self._logs.size < count:
            self.exhausted = True

    def log_values(self, count):
        """Log of the top `count` eigenvalues (fewer if underflow hit)."""
        self._extend(count)
        return self._logs[:count].copy()

    def values(self, count):
        return np.exp(self.log_values(count))

    def indices(self, count):
        """1-based lattice multi-indices matching log_values order."""
        self._extend(count)
        return [tuple(int(v) for v in row) for row in self._idx[:count]]

    def count_for_trace_gap(self, rel_tol, max_count=2 ** 20, start=64):
        """Smallest enumerated count whose trace gap is <= rel_tol * trace.

        Returns the count actually reached; the gap condition may be unmet
        if the spectrum ran out of representable values or max_count was hit
        first (the remaining mass is then below underflow anyway or the
        caller must treat the result as approximate).
        """
        target = rel_tol * self.trace
        count = min(start, max_count)
        while True:
            vals = self.values(count)
            if self.exhausted and vals.size <= count:
                return vals.size
            if self.trace - float(np.sum(vals)) <= target:
                return vals.size
            if count >= max_count:
                return count
            count = min(2 * count, max_count)


def enumerate_eigenvalues(theta, count, return_indices=False):
    """The `count` largest eigenvalues of the continuous Gaussian operator.

    Returns a descending array (shorter than `count` only if values
    underflowed double precision first). With return_indices=True also
    returns the matching multi-indices.
    """
    if count < 0:
        raise ValueError("count must be >= 0")
    spec = GaussianSpectrum(theta)
    vals = spec.values(count)
    if return_indices:
        return vals, spec.indices(count)
    return vals


def _esp_row(lams, k):
    """e_0..e_k of the given values, with a running log rescale.

    Returns (row, shift) such that e_j = row[j] * exp(shift) for every j;
    the rescale keeps the row inside double range. Values must be >= 0.
    """
    lams = np.asarray(lams, dtype=float)
    row = np.zeros(k + 1)
    row[0] = 1.0
    shift = 0.0
    for lam in lams:
        row[1:] += lam * row[:-1]
        top = row.max()
        if top > 1e250:
            row /= top
            shift += math.log(top)
    return row, shift


def _check_esp_args(lams, k):
    lams = np.asarray(lams, dtype=float)
    if lams.ndim != 1:
        raise ValueError("eigenvalues must be a 1-d array")
    if np.any(lams < 0.0) or not np.all(np.isfinite(lams)):
        raise ValueError("eigenvalues must be finite and non-negative")
    if k < 0 or k != int(k):
        raise ValueError("k must be a non-negative integer")
    return lams, int(k)


def elementary_symmetric(lams, k):
    """k-th elementary symmetric polynomial of the given eigenvalues.

    Uses the O(N k) recursion e_k(1..n) = e_k(1..n-1) + lam_n e_{k-1}(1..n-1).
    By convention e_0 = 1 and e_k = 0 when k exceeds the number of values
    (a warning flags that case).
    """
    lams, k = _check_esp_args(lams, k)
    if k > lams.size:
        warnings.warn("k=%d exceeds the %d available eigenvalues; e_k is 0 "
                      "by convention" % (k, lams.size), stacklevel=2)
        return 0.0
    if k == 0:
        return 1.0
    row, shift = _esp_row(lams, k)
    return float(row[k] * math.exp(shift))


def log_elementary_symmetric(lams, k):
    """log e_k, stable for spectra whose e_k overflows double precision.

    Returns -inf when e_k = 0 (k exceeds the count, or not enough nonzero
    values).
    """
    lams, k = _check_esp_args(lams, k)
    if k == 0:
        return 0.0
    if k > lams.size:
        return -np.inf
    scale = float(lams.max()) if lams.size else 0.0
    if scale == 0.0:
        return -np.inf
    row, shift = _esp_row(lams / scale, k)
    if row[k] == 0.0:
        return -np.inf
    return float(math.log(row[k]) + shift + k * math.log(scale))


def log_elementary_symmetric_row(lams, k):
    """Array of log e_j for j = 0..k (entries -inf where e_j = 0)."""
    lams, k = _check_esp_args(lams, k)
    out = np.full(k + 1, -np.inf)
    out[0] = 0.0
    if lams.size == 0:
        return out
    scale = float(lams.max())
    if scale == 0.0:
        return out
    kk = min(k, lams.size)
    row, shift = _esp_row(lams / scale, kk)
    js = np.arange(1, kk + 1)
    with np.errstate(divide="ignore"):
        out[1:kk + 1] = np.log(row[1:]) + shift + js * math.log(scale)
    return out
