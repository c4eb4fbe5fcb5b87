"""The package's acceptance checks, one test per numbered guarantee.

Each check runs at its stated tolerance and enforces a wall-clock limit;
run with `pytest tests/test_acceptance.py -v -s` to see one line per
check. The MCMC-based checks (3, 4, 9) dominate the runtime; the whole
file takes a few minutes on a laptop-class machine.

Every random input is frozen by seed, so the checks are deterministic:
a pass here is reproducible, not a lucky draw.
"""

import itertools
import json
import time
from contextlib import contextmanager

import numpy as np

from dpplearn.cli import main as cli_main
from dpplearn.conditional import conditional_log_prob, conditional_single_item_probs
from dpplearn.dataio import save_config, save_point_csv
from dpplearn.kernels import (
    DiscreteKernel,
    GaussianSpectrum,
    GaussianTheta,
    GroundSet,
    elementary_symmetric,
    log_elementary_symmetric,
    square_grid,
)
from dpplearn.likelihood import (
    BoundedLogPosteriorTarget,
    ContinuousGaussianFamily,
    DiscreteGaussianFamily,
    LogPosteriorTarget,
    ModelSpec,
    PolynomialFamily,
    dpp_log_likelihood,
)
from dpplearn.mcmc import bounded_mh, rw_mh, slice_hyperrect
from dpplearn.mle import finite_difference_gradient, grad_log_likelihood
from dpplearn.moments import (
    continuous_gaussian_moments,
    discrete_moment,
    empirical_moment,
)
from dpplearn.sampling import ContinuousGridSampler, sample_dpp
from dpplearn.spectral import (
    EigenTruncation,
    dpp_log_normalizer_bounds,
    kdpp_log_normalizer_bounds,
)

from helpers import brute_force_esp, grid_kernel, random_psd


@contextmanager
def check(label, limit_seconds):
    """Time one acceptance check and print a single PASS/FAIL line."""
    start = time.perf_counter()
    try:
        yield
    except Exception:
        print("%s: FAIL after %.1fs" % (label, time.perf_counter() - start),
              flush=True)
        raise
    elapsed = time.perf_counter() - start
    print("%s: PASS in %.1fs (limit %ds)" % (label, elapsed, limit_seconds),
          flush=True)
    assert elapsed < limit_seconds, (
        "%s exceeded its %ds wall-clock limit (%.1fs)"
        % (label, limit_seconds, elapsed))


def run_cli(tmp_path, command, config, seed, out_name):
    cfg_path = tmp_path / ("%s_%s.json" % (command, out_name))
    save_config(cfg_path, config)
    out = tmp_path / out_name
    code = cli_main([command, "--config", str(cfg_path), "--out", str(out),
                     "--seed", str(seed)])
    return code, out


def read_summary(out, name):
    return json.loads((out / name).read_text())


# The reference experiment used throughout checks 3 and 4: a 10 x 10
# unit-spaced grid centered at the origin, Gaussian quality scales
# (0.5, 0.5) and similarity scales (0.1, 0.2), 100 simulated samples.
EXPERIMENT_THETA = np.array([0.5, 0.5, 0.1, 0.2])


def experiment_model_and_data(seed, n_samples=100):
    ground = square_grid(10, 1.0)
    family = DiscreteGaussianFamily(ground, learn_quality=True)
    model = ModelSpec(family)
    kernel = DiscreteKernel(ground, family.build(EXPERIMENT_THETA))
    rng = np.random.default_rng(seed)
    data = [sample_dpp(kernel, rng) for _ in range(n_samples)]
    return model, data


def test_01_expected_cardinality_of_continuous_kernel():
    # trace formula at (alpha, rho, sigma) = (1000, 1, 1) in two dimensions
    with check("check 1 expected cardinality", 1):
        spectrum = GaussianSpectrum(GaussianTheta(1000.0, [1.0, 1.0], [1.0, 1.0]))
        lams = spectrum.values(spectrum.count_for_trace_gap(1e-10))
        expected = float(np.sum(lams / (1.0 + lams)))
        assert 16.5 <= expected <= 19.5


def test_02_normalizer_bounds_on_large_grid():
    # 3600-item kernel: truncated bounds must tighten monotonically and
    # close onto the exact normalizers once the spectrum is exhausted
    with check("check 2 normalizer bounds", 120):
        kernel = grid_kernel(n_side=60, spacing=1.0 / 6.0,
                             quality=(0.5, 0.5), similarity=(0.1, 0.2))
        n = kernel.n
        lams = kernel.eigenvalues
        exact_dpp = float(np.linalg.slogdet(kernel.matrix + np.eye(n))[1])
        exact_kdpp = log_elementary_symmetric(lams, 10)

        counts = [2 ** j for j in range(12)] + [n]
        dpp_lo, dpp_hi, kdpp_lo, kdpp_hi = [], [], [], []
        for m in counts:
            trunc = EigenTruncation(lams[:m], trace=kernel.trace,
                                    exact=(m == n), source=kernel)
            b = dpp_log_normalizer_bounds(trunc)
            assert b.log_lower <= exact_dpp + 1e-9
            assert b.log_upper >= exact_dpp - 1e-9
            dpp_lo.append(b.log_lower)
            dpp_hi.append(b.log_upper)
            b = kdpp_log_normalizer_bounds(trunc, 10)
            assert b.log_lower <= exact_kdpp + 1e-9
            assert b.log_upper >= exact_kdpp - 1e-9
            kdpp_lo.append(b.log_lower)
            kdpp_hi.append(b.log_upper)
        for lo, hi in ((dpp_lo, dpp_hi), (kdpp_lo, kdpp_hi)):
            assert all(a <= b + 1e-9 for a, b in zip(lo, lo[1:]))
            assert all(a >= b - 1e-9 for a, b in zip(hi, hi[1:]))
            assert abs(lo[-1] - hi[-1]) <= 1e-6
        assert abs(dpp_lo[-1] - exact_dpp) <= 1e-6
        assert abs(dpp_hi[-1] - exact_dpp) <= 1e-6
        assert abs(kdpp_lo[-1] - exact_kdpp) <= 1e-6
        assert abs(kdpp_hi[-1] - exact_kdpp) <= 1e-6


def test_03_bounded_mh_reproduces_exact_decisions():
    # the bound-driven sampler must make the same accept/reject choice as
    # the exact sampler at every one of 5000 steps when seeds are shared
    with check("check 3 bounded-sampler exactness", 600):
        model, data = experiment_model_and_data(seed=2033)
        exact = LogPosteriorTarget(model, data)
        bounded = BoundedLogPosteriorTarget(model, data, start_count=8)
        x0 = np.log(EXPERIMENT_THETA)
        scales = np.array([0.15, 0.15, 1.5, 1.5])
        a = rw_mh(exact, x0, 5000, np.random.default_rng(314), scales=scales)
        b = bounded_mh(bounded, x0, 5000, np.random.default_rng(314),
                       scales=scales)
        assert 0.1 < a.acceptance_rate < 0.7
        assert np.array_equal(a.accepted, b.accepted)
        assert np.array_equal(a.samples, b.samples)


def test_04_five_chain_convergence_diagnostics(tmp_path):
    # five overdispersed chains per sampler, averaged PSRF below 1.05;
    # runs through the command-line fit path end to end
    with check("check 4 convergence diagnostics", 1800):
        model_cfg = {"family": "discrete-gaussian",
                     "grid": {"n_side": 10, "spacing": 1.0},
                     "learn_quality": True}
        sim_cfg = {"model": model_cfg,
                   "theta": {"quality": 0.5, "similarity": [0.1, 0.2]},
                   "n_samples": 100}
        code, sim_out = run_cli(tmp_path, "simulate", sim_cfg,
                                seed=17, out_name="sim")
        assert code == 0
        data_csv = str(sim_out / "points.csv")

        # the similarity posteriors stretch over decades on the log scale
        # (unit spacing barely resolves them), so those coordinates get
        # much wider proposals than the tightly identified quality scales
        settings = {
            "mh": {"sampler": "mh", "iters": 2000, "burnin": 500,
                   "scales": {"quality_1": 0.15, "quality_2": 0.15,
                              "similarity_1": 1.5, "similarity_2": 1.5}},
            "slice": {"sampler": "slice", "iters": 300, "burnin": 100,
                      "widths": {"quality_1": 0.5, "quality_2": 0.5,
                                 "similarity_1": 3.0, "similarity_2": 3.0}},
        }
        psrf = {}
        for name, fit in settings.items():
            cfg = {"model": model_cfg, "data_csv": data_csv,
                   "n_samples": 100,
                   "start": {"quality": 0.5, "similarity": [0.1, 0.2]},
                   "fit": dict(fit, chains=5, overdispersion=0.4)}
            code, out = run_cli(tmp_path, "fit", cfg, seed=23,
                                out_name="fit_" + name)
            assert code == 0
            psrf[name] = read_summary(out, "fit_summary.json")["psrf_mean"]
        assert psrf["mh"] < 1.05, psrf
        assert psrf["slice"] < 1.05, psrf


def test_05_gradients_match_finite_differences():
    # twenty random small instances across the three differentiable
    # families: Gaussian similarity with uniform quality, Gaussian
    # quality plus similarity, and the polynomial kernel
    with check("check 5 analytic gradients", 60):
        rng = np.random.default_rng(5)
        for i in range(20):
            kind = i % 3
            n = int(rng.integers(4, 9))
            if kind == 2:
                ground = GroundSet(items=rng.uniform(0.2, 2.0, size=(n, 1)))
                family = PolynomialFamily(ground)
                # integer exponents keep the kernel PSD so the instance
                # can also be sampled for data
                theta = np.array([rng.uniform(0.5, 1.5),
                                  float(rng.integers(1, 3))])
            else:
                ground = GroundSet(items=rng.uniform(-1.0, 1.0, size=(n, 2)))
                family = DiscreteGaussianFamily(ground,
                                                learn_quality=(kind == 1))
                theta = rng.uniform(0.4, 1.5, size=4 if kind == 1 else 2)
            model = ModelSpec(family)
            kernel = DiscreteKernel(ground, family.build(theta))
            data = [sample_dpp(kernel, rng) for _ in range(3)]
            got = grad_log_likelihood(theta, data, model).gradient

            def objective(t):
                return dpp_log_likelihood(t, data, model)

            fd = finite_difference_gradient(objective, theta)
            np.testing.assert_allclose(got, fd, rtol=1e-5, atol=1e-9)


def test_06_elementary_symmetric_against_brute_force():
    with check("check 6 combinatorial oracles", 60):
        rng = np.random.default_rng(6)
        for n in range(1, 13):
            lams = rng.uniform(0.05, 2.5, size=n)
            for k in range(n + 1):
                got = elementary_symmetric(lams, k)
                ref = brute_force_esp(lams, k)
                assert abs(got - ref) <= 1e-10 * abs(ref)
        # the fixed-size normalizer really is the sum of principal minors
        L = random_psd(10, seed=660)
        lams = np.maximum(np.linalg.eigvalsh(L), 0.0)
        e3 = elementary_symmetric(lams, 3)
        brute = sum(float(np.linalg.det(L[np.ix_(B, B)]))
                    for B in itertools.combinations(range(10), 3))
        assert abs(e3 - brute) <= 1e-8 * brute


def test_07_moments_match_sampler_output():
    with check("check 7 moment consistency", 600):
        # discrete: 20k exact draws from the reference grid kernel
        kernel = grid_kernel(n_side=10, spacing=1.0,
                             quality=(0.5, 0.5), similarity=(0.1, 0.2))
        m0 = discrete_moment(kernel, 0)
        m2 = discrete_moment(kernel, 2)
        rng = np.random.default_rng(77)
        items = kernel.ground.items
        configs = [items[sample_dpp(kernel, rng)] for _ in range(20000)]
        e0, s0 = empirical_moment(configs, 0, return_se=True)
        e2, s2 = empirical_moment(configs, 2, return_se=True)
        assert abs(e0 - m0) <= 3.0 * s0
        assert np.all(np.abs(e2 - m2) <= 3.0 * s2)

        # continuous: grid-sampler draws against the closed forms
        theta = GaussianTheta(1000.0, [1.0, 1.0], [1.0, 1.0])
        theory = continuous_gaussian_moments(theta, (0, 2))
        sampler = ContinuousGridSampler(theta)
        crng = np.random.default_rng(770)
        draws = [sampler.draw(crng).points for _ in range(2000)]
        e0, s0 = empirical_moment(draws, 0, return_se=True)
        e2, s2 = empirical_moment(draws, 2, return_se=True)
        assert abs(e0 - theory[0]) <= 3.0 * s0
        assert np.all(np.abs(e2 - theory[2]) <= 3.0 * s2)


def test_08_conditional_probabilities_are_determinant_ratios():
    with check("check 8 conditional probabilities", 60):
        def subset_det(L, idx):
            idx = np.asarray(sorted(idx), dtype=int)
            if idx.size == 0:
                return 1.0
            return float(np.linalg.det(L[np.ix_(idx, idx)]))

        rng = np.random.default_rng(88)
        for n in range(2, 11):
            L = random_psd(n, seed=800 + n)
            for a_size in range(n - 1):
                A = sorted(rng.choice(n, size=a_size, replace=False).tolist())
                probs, comp = conditional_single_item_probs(L, A)
                assert abs(float(probs.sum()) - 1.0) <= 1e-10
                dets = np.array([subset_det(L, A + [int(b)]) for b in comp])
                np.testing.assert_allclose(probs, dets / dets.sum(),
                                           rtol=1e-8)
            # a larger completion against same-size enumeration
            A = sorted(rng.choice(n, size=max(1, n // 3),
                                  replace=False).tolist())
            rest = [j for j in range(n) if j not in A]
            size = min(2, len(rest))
            B = sorted(rng.choice(rest, size=size, replace=False).tolist())
            total = sum(subset_det(L, A + list(C))
                        for C in itertools.combinations(rest, size))
            ref = subset_det(L, A + B) / total
            got = float(np.exp(conditional_log_prob(L, A, B)))
            assert abs(got - ref) <= 1e-8 * ref


def test_09_posterior_concentrates_on_true_parameters():
    # 1000 samples at (1000, 1, 1): the 90% posterior intervals must
    # cover the true rho and sigma and pin gamma = sigma/rho tightly
    with check("check 9 posterior concentration", 7200):
        theta = GaussianTheta(1000.0, [1.0, 1.0], [1.0, 1.0])
        rng = np.random.default_rng(99)
        # the default spacing leaves visible discretization bias in the
        # simulated data at this sample size; an eighth of the similarity
        # length scale pushes it well below the posterior width
        sampler = ContinuousGridSampler(theta, spacing=0.125)
        data = [sampler.draw(rng) for _ in range(1000)]
        model = ModelSpec(ContinuousGaussianFamily(2))
        target = LogPosteriorTarget(model, data)

        # the posterior is a narrow curved ridge (log alpha, log rho and
        # log sigma correlate beyond 0.92), so the chain gets widths
        # proportional to the marginal scales and plenty of iterations
        widths = np.array([0.5, 0.06, 0.15])
        chains = [slice_hyperrect(target, np.log([1000.0, 1.0, 1.0]), 4000,
                                  np.random.default_rng([991, j]),
                                  widths=widths)
                  for j in range(2)]
        draws = np.vstack([c.draws(burnin=1000) for c in chains])
        rho, sigma = draws[:, 1], draws[:, 2]
        for column in (rho, sigma):
            q05, q95 = np.quantile(column, [0.05, 0.95])
            assert q05 <= 1.0 <= q95
        gamma = sigma / rho
        q25, q50, q75 = np.quantile(gamma, [0.25, 0.5, 0.75])
        assert (q75 - q25) / q50 < 0.25


def test_10_dispersion_classification_is_perfect(tmp_path):
    # two synthetic classes whose gamma differ tenfold: every
    # leave-one-out fold must classify its held-out sample correctly
    with check("check 10 dispersion classification", 3600):
        rng = np.random.default_rng(10)
        paths = {}
        for name, sigma in (("clumped", 0.1), ("spread", 1.0)):
            theta = GaussianTheta(200.0, [1.0], [sigma])
            sampler = ContinuousGridSampler(theta)
            draws = [sampler.draw(rng).points for _ in range(5)]
            path = tmp_path / ("%s.csv" % name)
            save_point_csv(path, draws, dim=1)
            paths[name] = str(path)
        config = {
            "model": {"family": "continuous-gaussian", "dim": 1},
            "classes": paths,
            "start": {"alpha": 200.0, "rho": 1.0, "sigma": 0.3},
            "predict_draws": 25,
            "fit": {"sampler": "slice", "iters": 150, "burnin": 50},
        }
        code, out = run_cli(tmp_path, "classify-loo", config,
                            seed=101, out_name="loo")
        assert code == 0
        summary = read_summary(out, "classify_summary.json")
        assert summary["n_folds"] == 10
        assert summary["accuracy_plugin"] == 1.0
        assert summary["accuracy_postavg"] == 1.0
