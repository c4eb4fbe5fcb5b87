"""Shared builders for the test suite."""

import numpy as np

from dpplearn.kernels import DiscreteGaussianTheta, build_discrete_kernel, square_grid


def random_psd(n, seed, scale=1.0):
    """A well-conditioned random PSD matrix with eigenvalues O(scale)."""
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n + 3))
    m = (a @ a.T) / (n + 3) * scale
    return 0.5 * (m + m.T)


def grid_kernel(n_side=5, spacing=0.5, quality=(0.5, 0.5), similarity=(0.1, 0.2)):
    """Discrete Gaussian kernel on a small centered lattice."""
    ground = square_grid(n_side, spacing=spacing)
    theta = DiscreteGaussianTheta(np.asarray(quality, float),
                                  np.asarray(similarity, float))
    return build_discrete_kernel(ground, theta)


def brute_force_esp(lams, k):
    """e_k by explicit subset enumeration; only for small inputs."""
    from itertools import combinations

    lams = np.asarray(lams, dtype=float)
    if k == 0:
        return 1.0
    if k > lams.size:
        return 0.0
    return float(sum(np.prod(c) for c in combinations(lams, k)))
