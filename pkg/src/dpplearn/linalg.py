"""Shared dense linear algebra helpers."""

import numpy as np

# jitter ladder used when a Cholesky factorization of a PSD matrix fails:
# start at 1e-10 * mean(diag), grow 10x, give up after 3 retries
JITTER_START = 1e-10
JITTER_GROWTH = 10.0
JITTER_RETRIES = 3


class FactorizationError(np.linalg.LinAlgError):
    """Symmetric factorization failed even after the jitter ladder."""


def chol_factor(a):
    """Lower Cholesky factor of a symmetric PSD matrix.

    Adds a jitter of JITTER_START * mean(diag) on failure, growing it by
    JITTER_GROWTH for up to JITTER_RETRIES attempts. Returns (factor, jitter)
    where jitter is 0.0 when no regularization was needed.
    """
    a = np.asarray(a, dtype=float)
    if a.shape[-1] == 0:
        return np.zeros_like(a), 0.0
    try:
        return np.linalg.cholesky(a), 0.0
    except np.linalg.LinAlgError:
        pass
    scale = float(np.mean(np.diagonal(a, axis1=-2, axis2=-1)))
    if not np.isfinite(scale) or scale <= 0.0:
        scale = 1.0
    eye = np.eye(a.shape[-1])
    jitter = JITTER_START * scale
    for _ in range(JITTER_RETRIES):
        try:
            return np.linalg.cholesky(a + jitter * eye), jitter
        except np.linalg.LinAlgError:
            jitter *= JITTER_GROWTH
    raise FactorizationError(
        "Cholesky failed after jitter up to %.3e (matrix size %d)"
        % (jitter / JITTER_GROWTH, a.shape[-1])
    )


def chol_logdet(a):
    """Log-determinant of a symmetric PSD matrix via jittered Cholesky.

    The empty matrix has log-determinant 0 (the determinant of the empty
    product is 1).
    """
    a = np.asarray(a, dtype=float)
    if a.shape[-1] == 0:
        return 0.0
    factor, _ = chol_factor(a)
    return 2.0 * float(np.sum(np.log(np.diagonal(factor, axis1=-2, axis2=-1))))


def batch_chol_logdet(mats):
    """Log-determinants of a stack of symmetric PSD matrices, shape (G, s, s).

    Tries one batched factorization first and falls back to the per-matrix
    jitter ladder only for stacks where some matrix is near-singular.
    """
    mats = np.asarray(mats, dtype=float)
    if mats.shape[0] == 0 or mats.shape[-1] == 0:
        return np.zeros(mats.shape[0])
    try:
        factors = np.linalg.cholesky(mats)
        return 2.0 * np.sum(np.log(np.diagonal(factors, axis1=-2, axis2=-1)), axis=-1)
    except np.linalg.LinAlgError:
        return np.array([chol_logdet(m) for m in mats])


def check_symmetric(a, rel_tol=1e-12, name="matrix"):
    """Raise ValueError if a is not symmetric within a relative tolerance."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("%s must be square, got shape %s" % (name, a.shape))
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    if scale == 0.0:
        return
    asym = float(np.max(np.abs(a - a.T)))
    if asym > rel_tol * scale:
        raise ValueError(
            "%s is not symmetric: max asymmetry %.3e exceeds %.3e"
            % (name, asym, rel_tol * scale)
        )


def min_eigenvalue(a):
    """Smallest eigenvalue of a symmetric matrix."""
    a = np.asarray(a, dtype=float)
    if a.shape[0] == 0:
        return 0.0
    return float(np.linalg.eigvalsh(a)[0])
