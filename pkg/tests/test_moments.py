import numpy as np
import pytest

from dpplearn.kernels import (
    DiscreteKernel,
    GaussianTheta,
    gaussian_kernel_matrix,
    square_grid,
)
from dpplearn.likelihood import DiscreteGaussianFamily, ModelSpec
from dpplearn.mcmc import Chain
from dpplearn.moments import (
    continuous_gaussian_moments,
    discrete_moment,
    empirical_moment,
    marginal_kernel,
    moment_check,
    moment_match_grid,
)
from dpplearn.sampling import sample_dpp

from helpers import grid_kernel, random_psd


def test_marginal_kernel_matches_direct_inverse():
    L = random_psd(8, seed=0)
    K = marginal_kernel(L)
    want = np.eye(8) - np.linalg.inv(L + np.eye(8))
    np.testing.assert_allclose(K, want, atol=1e-11)
    np.testing.assert_allclose(K, K.T)
    lam = np.sort(np.linalg.eigvalsh(L))
    got = np.sort(np.linalg.eigvalsh(K))
    np.testing.assert_allclose(got, lam / (1.0 + lam), atol=1e-11)
    diag = np.diag(K)
    assert np.all(diag >= 0.0) and np.all(diag <= 1.0)


def test_discrete_moments_against_bruteforce():
    kernel = grid_kernel()
    K = marginal_kernel(kernel)
    diag = np.diag(K)
    assert discrete_moment(kernel, 0) == pytest.approx(float(np.trace(K)))
    for order in (1, 2, 3):
        want = (kernel.ground.items ** order).T @ diag
        got = discrete_moment(kernel, order)
        np.testing.assert_allclose(got, want, rtol=1e-12)
    # precomputed marginal short-circuits the factorization
    np.testing.assert_allclose(discrete_moment(kernel, 2, marginal=K),
                               discrete_moment(kernel, 2), rtol=1e-14)


def test_discrete_moment_validation():
    kernel = grid_kernel()
    with pytest.raises(ValueError, match="order"):
        discrete_moment(kernel, -1)
    bare = DiscreteKernel(None, random_psd(4, seed=1))
    assert discrete_moment(bare, 0) > 0.0
    with pytest.raises(ValueError, match="coordinates"):
        discrete_moment(bare, 2)


def test_continuous_moments_match_discretized_operator():
    # dense discretization of the kernel operator on a wide interval; the
    # Gaussian kernel makes this converge far below the test tolerance
    theta = GaussianTheta(20.0, [1.0], [0.7])
    x = np.linspace(-12.0, 12.0, 1201)
    dx = x[1] - x[0]
    L = gaussian_kernel_matrix(theta, x[:, None]) * dx
    K = L @ np.linalg.inv(L + np.eye(x.size))
    diag = np.diag(K)
    got = continuous_gaussian_moments(theta, [0, 2, 4])
    assert got[0] == pytest.approx(float(diag.sum()), rel=1e-8)
    assert got[2][0] == pytest.approx(float((x ** 2) @ diag), rel=1e-8)
    assert got[4][0] == pytest.approx(float((x ** 4) @ diag), rel=1e-8)


def test_continuous_moments_frozen_values():
    theta = GaussianTheta(1000.0, [1.0, 1.0], [1.0, 1.0])
    got = continuous_gaussian_moments(theta, [0, 1, 2, 4])
    assert got[0] == pytest.approx(17.520265773070122, rel=1e-12)
    np.testing.assert_array_equal(got[1], np.zeros(2))
    np.testing.assert_allclose(
        got[2], [21.660201720309669, 21.660221287083999], rtol=1e-12)
    np.testing.assert_allclose(
        got[4], [64.120314855257163, 64.120585980435436], rtol=1e-12)


def test_continuous_moment_validation():
    theta = GaussianTheta(20.0, [1.0], [0.7])
    with pytest.raises(ValueError, match="orders"):
        continuous_gaussian_moments(theta, [-2])
    with pytest.raises(ValueError, match="closed form"):
        continuous_gaussian_moments(theta, [6])
    with pytest.raises(ValueError, match="raise count"):
        continuous_gaussian_moments(GaussianTheta(200.0, [1.0], [0.05]),
                                    [0], count=4)


def test_empirical_moment_by_hand():
    configs = [np.array([[1.0, 2.0], [3.0, 4.0]]),
               np.zeros((0, 2)),
               np.array([[2.0, -1.0]])]
    assert empirical_moment(configs, 0) == pytest.approx(1.0)
    np.testing.assert_allclose(empirical_moment(configs, 1),
                               [(4.0 + 0.0 + 2.0) / 3, (6.0 + 0.0 - 1.0) / 3])
    np.testing.assert_allclose(empirical_moment(configs, 2),
                               [(10.0 + 0.0 + 4.0) / 3, (20.0 + 0.0 + 1.0) / 3])
    value, se = empirical_moment(configs, 0, return_se=True)
    counts = np.array([2.0, 0.0, 1.0])
    assert value == pytest.approx(counts.mean())
    assert se == pytest.approx(counts.std(ddof=1) / np.sqrt(3))


def test_empirical_moment_edge_cases():
    with pytest.raises(ValueError, match="at least one"):
        empirical_moment([], 0)
    with pytest.raises(ValueError, match="undefined"):
        empirical_moment([np.zeros((0, 2))], 2)
    with pytest.raises(ValueError, match="order"):
        empirical_moment([np.ones((1, 1))], -1)
    value, se = empirical_moment([np.ones((2, 1))], 0, return_se=True)
    assert value == 2.0
    assert np.isnan(se).all()


def small_chain_and_model(n_draws=40, center=(0.3, 0.3), spread=0.2,
                          seed=7):
    ground = square_grid(3, 0.7)
    fam = DiscreteGaussianFamily(ground, learn_quality=False)
    model = ModelSpec(fam)
    rng = np.random.default_rng(seed)
    samples = rng.uniform(1.0 - spread, 1.0 + spread,
                          size=(n_draws + 1, 2)) * np.asarray(center)
    chain = Chain(fam.param_names, samples, np.zeros(n_draws + 1),
                  np.ones(n_draws + 1, dtype=bool), seed=None, settings={})
    data = [sample_dpp(fam.build(list(center)), rng) for _ in range(200)]
    return chain, data, model


def test_moment_check_report_shape_and_bands():
    chain, data, model = small_chain_and_model()
    reports = moment_check(chain, data, model, orders=(0, 2))
    assert len(reports) == 3
    assert reports[0].order == 0 and reports[0].dimension is None
    assert [r.dimension for r in reports[1:]] == [0, 1]
    for r in reports:
        assert r.band_low <= r.theoretical <= r.band_high
        assert r.discrepancy == pytest.approx(r.empirical - r.theoretical)
        assert r.inside_band == (r.band_low <= r.empirical <= r.band_high)
    # the chain straddles the generating parameters, so the cardinality
    # moment must sit inside a 99 percent band
    wide = moment_check(chain, data, model, orders=(0,), band=0.99)
    assert wide[0].inside_band


def test_moment_check_validation():
    chain, data, model = small_chain_and_model(n_draws=10)
    with pytest.raises(ValueError, match="band"):
        moment_check(chain, data, model, band=1.0)
    with pytest.raises(ValueError, match="burnin"):
        moment_check(chain, data, model, burnin=10)


def test_moment_match_grid_recovers_scale():
    _, data, model = small_chain_and_model()
    grid = np.linspace(0.1, 0.6, 11)
    best, score, table = moment_match_grid(
        model, data, {"similarity_1": grid}, theta0=[0.3, 0.3])
    assert len(table) == 11
    assert best[1] == 0.3
    assert 0.15 <= best[0] <= 0.5
    assert score == min(s for _, s in table)


def test_moment_match_grid_two_params_and_validation():
    _, data, model = small_chain_and_model(n_draws=5)
    grids = {"similarity_1": [0.2, 0.3], "similarity_2": [0.2, 0.3, 0.4]}
    best, score, table = moment_match_grid(model, data, grids,
                                           theta0=[0.3, 0.3])
    assert len(table) == 6
    assert np.isfinite(score)
    with pytest.raises(ValueError, match="1 or 2"):
        moment_match_grid(model, data, {}, theta0=[0.3, 0.3])
    with pytest.raises(ValueError, match="unknown parameter"):
        moment_match_grid(model, data, {"nope": [1.0]}, theta0=[0.3, 0.3])
    with pytest.raises(ValueError, match="entries"):
        moment_match_grid(model, data, {"similarity_1": [0.3]}, theta0=[0.3])
