"""Exact DPP and k-DPP samplers, discrete and grid-discretized continuous.

Discrete draws follow the spectral recipe: keep each eigenvector with
probability lam/(1+lam) (or choose exactly k of them through the elementary
symmetric polynomial recursion), then run the orthogonalizing
point-selection loop on the kept eigenvectors.

Continuous Gaussian draws discretize the plane into cells, weight the
kernel by the cell volume so the grid spectrum approximates the operator's,
draw a discrete sample, and return the selected cell centers with uniform
in-cell jitter. The kernel is a product over dimensions, so the grid
eigendecomposition factorizes into per-dimension decompositions and the
full grid matrix is never formed.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import erfcinv

from .kernels import DiscreteKernel, PointConfig

__all__ = [
    "sample_dpp",
    "sample_kdpp",
    "ContinuousGridSampler",
    "sample_continuous_via_grid",
]

# the grid must cover all but this fraction of the quality mass
BOX_MASS_TOL = 1e-4

# grid spacing must not exceed min(sqrt(sigma_d)) / SPACING_DIVISOR
SPACING_DIVISOR = 3.0


def _as_rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _projection_sample(vectors, rng):
    """Sample an index set from the projection DPP spanned by the columns.

    Columns must be orthonormal. Each step picks an item with probability
    proportional to the squared row norm, then restricts the span to
    vectors vanishing at that item and reorthonormalizes.
    """
    V = np.asarray(vectors, dtype=float)
    n = V.shape[0]
    items = []
    while V.shape[1] > 0:
        p = np.maximum(np.sum(V * V, axis=1), 0.0)
        p /= p.sum()
        i = int(rng.choice(n, p=p))
        items.append(i)
        j = int(np.argmax(np.abs(V[i])))
        pivot = V[:, j].copy()
        rest = np.delete(V, j, axis=1)
        V = rest - np.outer(pivot / pivot[i], rest[i])
        if V.shape[1]:
            V, _ = np.linalg.qr(V)
    return np.sort(np.array(items, dtype=int))


def _bernoulli_columns(lams, rng):
    u = rng.random(lams.size)
    return np.nonzero(u < lams / (1.0 + lams))[0]


def _kdpp_columns(lams, k, rng):
    """Choose exactly k eigenvalue indices with probability prop. to products.

    Walks the prefix recursion e_j(1..m) = e_j(1..m-1) + lam_m e_{j-1}(1..m-1)
    backwards, selecting index m with probability
    lam_m e_{j-1}(1..m-1) / e_j(1..m). All arithmetic is in the log domain.
    """
    n = lams.size
    if k == 0:
        return np.zeros(0, dtype=int)
    with np.errstate(divide="ignore"):
        log_lam = np.log(lams)
    log_e = np.full((k + 1, n + 1), -np.inf)
    log_e[0, :] = 0.0
    for m in range(1, n + 1):
        log_e[1:, m] = np.logaddexp(log_e[1:, m - 1],
                                    log_lam[m - 1] + log_e[:-1, m - 1])
    if log_e[k, n] == -np.inf:
        raise ValueError("spectrum has rank below k; e_k is zero")
    sel = []
    j = k
    for m in range(n, 0, -1):
        if j == 0:
            break
        logp = log_lam[m - 1] + log_e[j - 1, m - 1] - log_e[j, m]
        if math.log(rng.random()) < logp:
            sel.append(m - 1)
            j -= 1
    return np.array(sel[::-1], dtype=int)


def sample_dpp(kernel, rng):
    """One exact DPP draw from a discrete kernel, as a sorted index array."""
    rng = _as_rng(rng)
    if not isinstance(kernel, DiscreteKernel):
        kernel = DiscreteKernel(None, kernel)
    lams, vectors = kernel.eigendecomposition()
    cols = _bernoulli_columns(lams, rng)
    if cols.size == 0:
        return np.zeros(0, dtype=int)
    return _projection_sample(vectors[:, cols], rng)


def sample_kdpp(kernel, k, rng):
    """One exact k-DPP draw (a size-k index set) from a discrete kernel."""
    rng = _as_rng(rng)
    if not isinstance(kernel, DiscreteKernel):
        kernel = DiscreteKernel(None, kernel)
    k = int(k)
    if k < 0:
        raise ValueError("k must be >= 0")
    if k > kernel.n:
        raise ValueError("k=%d exceeds the ground set size %d" % (k, kernel.n))
    lams, vectors = kernel.eigendecomposition()
    cols = _kdpp_columns(lams, k, rng)
    if cols.size == 0:
        return np.zeros(0, dtype=int)
    return _projection_sample(vectors[:, cols], rng)


class ContinuousGridSampler:
    """Grid-discretized sampler for the continuous Gaussian model.

    The box defaults to a symmetric region holding all but BOX_MASS_TOL of
    the quality mass, split evenly across dimensions; the spacing defaults
    to the finest-similarity rule min(sqrt(sigma_d)) / 3. Explicit values
    are validated against both preconditions. Draws reuse the per-dimension
    eigendecompositions.
    """

    def __init__(self, theta, box=None, spacing=None):
        self.theta = theta
        dim = theta.dim
        max_spacing = float(np.min(np.sqrt(theta.sigma))) / SPACING_DIVISOR
        if spacing is None:
            spacing = max_spacing
        spacing = float(spacing)
        if spacing <= 0.0:
            raise ValueError("spacing must be positive")
        if spacing > max_spacing * (1.0 + 1e-12):
            raise ValueError(
                "spacing %.4g exceeds min(sqrt(sigma))/%g = %.4g; the grid "
                "would undersample the similarity scale"
                % (spacing, SPACING_DIVISOR, max_spacing)
            )
        # per-dim quality is centered Gaussian with std sqrt(rho/2); a
        # symmetric box keeps per-dim tail mass erfc(h / sqrt(rho))
        std = np.sqrt(theta.rho / 2.0)
        if box is None:
            per_dim_tail = BOX_MASS_TOL / (2.0 * dim)
            half = np.sqrt(theta.rho) * erfcinv(2.0 * per_dim_tail)
            box = np.column_stack([-half, half])
        box = np.asarray(box, dtype=float)
        if box.shape != (dim, 2) or np.any(box[:, 0] >= box[:, 1]):
            raise ValueError("box must be (dim, 2) with low < high per row")
        from scipy.stats import norm

        coverage = 1.0
        for d in range(dim):
            coverage *= norm.cdf(box[d, 1] / std[d]) - norm.cdf(box[d, 0] / std[d])
        if coverage < 1.0 - BOX_MASS_TOL:
            raise ValueError(
                "box covers %.6f of the quality mass, below %.6f"
                % (coverage, 1.0 - BOX_MASS_TOL)
            )
        self.box = box
        self.centers = []
        self.widths = np.empty(dim)
        lam_parts = []
        self._vector_parts = []
        for d in range(dim):
            length = box[d, 1] - box[d, 0]
            cells = int(np.ceil(length / spacing))
            width = length / cells
            centers = box[d, 0] + (np.arange(cells) + 0.5) * width
            self.centers.append(centers)
            self.widths[d] = width
            diff = centers[:, None] - centers[None, :]
            quality = (np.exp(-centers ** 2 / theta.rho[d])
                       / math.sqrt(math.pi * theta.rho[d]))
            part = (np.sqrt(quality)[:, None] * np.sqrt(quality)[None, :]
                    * np.exp(-diff * diff / (2.0 * theta.sigma[d])) * width)
            w, u = np.linalg.eigh(part)
            lam_parts.append(np.maximum(w, 0.0))
            self._vector_parts.append(u)
        self.shape = tuple(c.size for c in self.centers)
        prod = lam_parts[0]
        for d in range(1, dim):
            prod = np.multiply.outer(prod, lam_parts[d])
        self.eigenvalues = theta.alpha * prod.reshape(-1)

    @property
    def n_cells(self):
        return int(np.prod(self.shape))

    def expected_cardinality(self):
        lam = self.eigenvalues
        return float(np.sum(lam / (1.0 + lam)))

    def _column(self, flat_index):
        idx = np.unravel_index(flat_index, self.shape)
        v = self._vector_parts[0][:, idx[0]]
        for d in range(1, len(self.shape)):
            v = np.kron(v, self._vector_parts[d][:, idx[d]])
        return v

    def draw(self, rng, k=None):
        """One draw as a PointConfig of jittered cell-center coordinates."""
        rng = _as_rng(rng)
        if k is None:
            cols = _bernoulli_columns(self.eigenvalues, rng)
        else:
            k = int(k)
            if k < 0 or k > self.n_cells:
                raise ValueError("k must lie in [0, %d]" % self.n_cells)
            cols = _kdpp_columns(self.eigenvalues, k, rng)
        if cols.size == 0:
            return PointConfig(np.zeros((0, self.theta.dim)))
        vectors = np.column_stack([self._column(c) for c in cols])
        items = _projection_sample(vectors, rng)
        idx = np.unravel_index(items, self.shape)
        pts = np.column_stack([self.centers[d][idx[d]] for d in range(len(self.shape))])
        jitter = (rng.random(pts.shape) - 0.5) * self.widths
        return PointConfig(pts + jitter)


def sample_continuous_via_grid(theta, rng, box=None, spacing=None, k=None):
    """One grid-discretized draw from the continuous Gaussian model.

    Convenience wrapper over ContinuousGridSampler; build the sampler
    directly when making many draws, so the grid spectrum is reused.
    """
    return ContinuousGridSampler(theta, box=box, spacing=spacing).draw(_as_rng(rng), k=k)
