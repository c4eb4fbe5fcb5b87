import numpy as np
import pytest

from dpplearn.linalg import (
    FactorizationError,
    batch_chol_logdet,
    check_symmetric,
    chol_factor,
    chol_logdet,
    min_eigenvalue,
)
from helpers import random_psd


@pytest.mark.parametrize("n", [1, 3, 8, 20])
def test_chol_logdet_matches_slogdet(n):
    a = random_psd(n, seed=n) + 0.5 * np.eye(n)
    sign, ref = np.linalg.slogdet(a)
    assert sign > 0
    assert chol_logdet(a) == pytest.approx(ref, rel=1e-12)


def test_chol_factor_no_jitter_when_pd():
    a = random_psd(6, seed=1) + np.eye(6)
    factor, jitter = chol_factor(a)
    assert jitter == 0.0
    np.testing.assert_allclose(factor @ factor.T, a, rtol=0, atol=1e-12)


def test_chol_factor_jitters_singular_psd():
    # rank-1 PSD matrix: exact Cholesky fails, the ladder must rescue it
    v = np.array([1.0, 2.0, 3.0])
    a = np.outer(v, v)
    factor, jitter = chol_factor(a)
    assert jitter > 0.0
    np.testing.assert_allclose(factor @ factor.T, a + jitter * np.eye(3),
                               rtol=0, atol=1e-10)


def test_chol_factor_rejects_indefinite():
    a = np.diag([1.0, -1.0])
    with pytest.raises(FactorizationError):
        chol_factor(a)


def test_chol_logdet_empty_matrix_is_zero():
    assert chol_logdet(np.zeros((0, 0))) == 0.0


def test_batch_chol_logdet_matches_loop():
    mats = np.stack([random_psd(4, seed=s) + 0.3 * np.eye(4) for s in range(5)])
    got = batch_chol_logdet(mats)
    want = [np.linalg.slogdet(m)[1] for m in mats]
    np.testing.assert_allclose(got, want, rtol=1e-12)


def test_batch_chol_logdet_falls_back_per_matrix():
    good = random_psd(3, seed=2) + np.eye(3)
    v = np.array([1.0, 1.0, 1.0])
    singular = np.outer(v, v)
    got = batch_chol_logdet(np.stack([good, singular]))
    assert got[0] == pytest.approx(np.linalg.slogdet(good)[1], rel=1e-10)
    assert np.isfinite(got[1])


def test_batch_chol_logdet_empty_stack():
    assert batch_chol_logdet(np.zeros((0, 3, 3))).shape == (0,)


def test_check_symmetric():
    a = random_psd(4, seed=3)
    check_symmetric(a)
    b = a.copy()
    b[0, 1] += 1e-3
    with pytest.raises(ValueError, match="not symmetric"):
        check_symmetric(b)
    with pytest.raises(ValueError, match="square"):
        check_symmetric(np.zeros((2, 3)))


def test_min_eigenvalue():
    a = np.diag([3.0, -2.0, 7.0])
    assert min_eigenvalue(a) == pytest.approx(-2.0)
    assert min_eigenvalue(np.zeros((0, 0))) == 0.0
