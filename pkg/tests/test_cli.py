import json

import numpy as np
import pytest

from dpplearn.cli import main
from dpplearn.dataio import (
    load_point_csv,
    save_annotation_csv,
    save_config,
    save_feature_csv,
    save_point_csv,
)
from dpplearn.kernels import GaussianTheta
from dpplearn.sampling import sample_continuous_via_grid


def run(tmp_path, command, config, *extra, seed=0, out_name="out"):
    cfg_path = tmp_path / ("%s.json" % command)
    save_config(cfg_path, config)
    out = tmp_path / out_name
    argv = [command, "--config", str(cfg_path), "--out", str(out)]
    if seed is not None:
        argv += ["--seed", str(seed)]
    argv += list(extra)
    return main(argv), out


def read_summary(out, name):
    return json.loads((out / name).read_text())


DISCRETE_MODEL = {
    "family": "discrete-gaussian",
    "grid": {"n_side": 3, "spacing": 0.7},
    "learn_quality": False,
}


def test_simulate_discrete_dpp(tmp_path):
    config = {"model": DISCRETE_MODEL, "theta": {"similarity": 0.3},
              "n_samples": 6}
    code, out = run(tmp_path, "simulate", config)
    assert code == 0
    summary = read_summary(out, "simulate_summary.json")
    assert summary["command"] == "simulate"
    assert summary["seed"] == 0
    assert summary["version"]
    assert len(summary["cardinality"]["counts"]) == 6
    assert summary["analytic_expected_cardinality"] > 0.0
    pts = load_point_csv(out / "points.csv", n_samples=6)
    assert len(pts) == 6


def test_simulate_needs_explicit_seed(tmp_path):
    config = {"model": DISCRETE_MODEL, "theta": {"similarity": 0.3},
              "n_samples": 2}
    code, _ = run(tmp_path, "simulate", config, seed=None)
    assert code == 2


def test_simulate_kdpp_fixed_cardinality(tmp_path):
    model = dict(DISCRETE_MODEL, measure="kdpp", k=3)
    config = {"model": model, "theta": {"similarity": 0.3}, "n_samples": 5}
    code, out = run(tmp_path, "simulate", config)
    assert code == 0
    summary = read_summary(out, "simulate_summary.json")
    assert summary["cardinality"]["counts"] == [3] * 5
    assert summary["analytic_expected_cardinality"] == 3.0


def test_simulate_continuous(tmp_path):
    config = {
        "model": {"family": "continuous-gaussian", "dim": 1},
        "theta": {"alpha": 8.0, "rho": 1.0, "sigma": 0.5},
        "n_samples": 4,
    }
    code, out = run(tmp_path, "simulate", config)
    assert code == 0
    summary = read_summary(out, "simulate_summary.json")
    assert summary["grid_expected_cardinality"] == pytest.approx(
        summary["analytic_expected_cardinality"], rel=0.01)
    pts = load_point_csv(out / "points.csv", n_samples=4)
    assert all(p.shape[1] == 1 for p in pts)


def simulate_discrete_data(tmp_path):
    config = {"model": DISCRETE_MODEL, "theta": {"similarity": 0.3},
              "n_samples": 30}
    code, out = run(tmp_path, "simulate", config, out_name="sim")
    assert code == 0
    return out / "points.csv"


def test_fit_discrete_two_slice_chains(tmp_path):
    data = simulate_discrete_data(tmp_path)
    config = {
        "model": DISCRETE_MODEL,
        "data_csv": str(data),
        "n_samples": 30,
        "start": {"similarity": 0.4},
        "fit": {"sampler": "slice", "chains": 2, "iters": 40, "burnin": 10},
    }
    code, out = run(tmp_path, "fit", config)
    assert code == 0
    summary = read_summary(out, "fit_summary.json")
    assert summary["sampler"] == "slice"
    assert summary["param_names"] == ["similarity_1", "similarity_2"]
    assert set(summary["posterior"]) == {"similarity_1", "similarity_2"}
    for stats in summary["posterior"].values():
        assert stats["q05"] <= stats["q50"] <= stats["q95"]
    assert summary["psrf_mean"] is not None
    assert (out / "chain_00.csv").exists()
    assert (out / "chain_01.csv").exists()


def test_fit_cli_flags_override_config(tmp_path):
    data = simulate_discrete_data(tmp_path)
    config = {
        "model": DISCRETE_MODEL,
        "data_csv": str(data),
        "start": {"similarity": 0.4},
        "fit": {"sampler": "slice", "iters": 500},
    }
    code, out = run(tmp_path, "fit", config, "--iters", "15",
                    "--sampler", "mh")
    assert code == 0
    summary = read_summary(out, "fit_summary.json")
    assert summary["iters"] == 15
    assert summary["sampler"] == "mh"
    assert summary["config"]["fit"]["iters"] == 15


def test_fit_mle_with_overdispersed_starts(tmp_path):
    data = simulate_discrete_data(tmp_path)
    config = {
        "model": DISCRETE_MODEL,
        "data_csv": str(data),
        "start": {"similarity": 0.3},
        "fit": {"sampler": "mle", "chains": 2, "iters": 80,
                "overdispersion": 0.2, "step": 0.2},
    }
    code, out = run(tmp_path, "fit", config)
    assert code == 0
    summary = read_summary(out, "fit_summary.json")
    assert len(summary["starts"]) == 2
    for start in summary["starts"]:
        assert set(start["theta"]) == {"similarity_1", "similarity_2"}
        assert np.isfinite(start["objective"])
    assert (out / "ascent_00.csv").exists()
    assert (out / "ascent_01.csv").exists()


def continuous_data_csv(tmp_path, sigma=0.5, n=3):
    theta = GaussianTheta(8.0, [1.0], [sigma])
    rng = np.random.default_rng(3)
    draws = [sample_continuous_via_grid(theta, rng).points for _ in range(n)]
    path = tmp_path / "cont.csv"
    save_point_csv(path, draws, dim=1)
    return path


def test_fit_continuous_bounded_slice(tmp_path):
    data = continuous_data_csv(tmp_path)
    config = {
        "model": {"family": "continuous-gaussian", "dim": 1},
        "data_csv": str(data),
        "start": {"alpha": 8.0, "rho": 1.0, "sigma": 0.5},
        "fit": {"sampler": "bounded-slice", "iters": 15},
    }
    code, out = run(tmp_path, "fit", config)
    assert code == 0
    summary = read_summary(out, "fit_summary.json")
    assert summary["sampler"] == "bounded-slice"
    assert (out / "chain_00.csv").exists()


def test_fit_continuous_kdpp_needs_bounded_sampler(tmp_path):
    data = continuous_data_csv(tmp_path)
    config = {
        "model": {"family": "continuous-gaussian", "dim": 1,
                  "measure": "kdpp", "k": 4},
        "data_csv": str(data),
        "fit": {"sampler": "slice", "iters": 10},
    }
    code, _ = run(tmp_path, "fit", config)
    assert code == 2


def test_fit_exit_3_on_indefinite_kernel(tmp_path, capsys):
    # this fractional-exponent instance is indefinite on items {0, 1, 2}
    points = [[0.24627738], [0.31472587], [0.9554028], [1.98349272]]
    data = tmp_path / "poly.csv"
    save_point_csv(data, [np.asarray(points)[:3]], dim=1)
    config = {
        "model": {"family": "polynomial", "points": points},
        "data_csv": str(data),
        "start": {"offset": 0.1, "exponent": 0.3},
        "fit": {"sampler": "slice", "iters": 10},
    }
    code, _ = run(tmp_path, "fit", config)
    assert code == 3
    assert "numerical failure" in capsys.readouterr().err


def test_fit_exit_4_when_bounds_stuck(tmp_path, capsys):
    theta = GaussianTheta(50.0, [1.0, 1.0], [0.3, 0.3])
    rng = np.random.default_rng(4)
    draws = [sample_continuous_via_grid(theta, rng).points]
    data = tmp_path / "wide.csv"
    save_point_csv(data, draws, dim=2)
    config = {
        "model": {"family": "continuous-gaussian", "dim": 2},
        "data_csv": str(data),
        "start": {"alpha": 200.0, "rho": 1.0, "sigma": 0.05},
        "fit": {"sampler": "bounded-mh", "iters": 10,
                "start_count": 8, "max_count": 8},
    }
    code, _ = run(tmp_path, "fit", config)
    assert code == 4
    assert "unresolved" in capsys.readouterr().err


def test_moments_after_fit(tmp_path):
    data = simulate_discrete_data(tmp_path)
    fit_config = {
        "model": DISCRETE_MODEL,
        "data_csv": str(data),
        "start": {"similarity": 0.3},
        "fit": {"sampler": "slice", "iters": 40},
    }
    code, fit_out = run(tmp_path, "fit", fit_config, out_name="fit")
    assert code == 0
    config = {
        "model": DISCRETE_MODEL,
        "data_csv": str(data),
        "chain_csv": str(fit_out / "chain_00.csv"),
        "burnin": 10,
        "orders": [0, 2],
    }
    code, out = run(tmp_path, "moments", config)
    assert code == 0
    summary = read_summary(out, "moments_summary.json")
    assert summary["n_reports"] == 3
    assert (out / "moments.csv").exists()
    orders = [r["order"] for r in summary["reports"]]
    assert orders == [0, 2, 2]


def test_moments_rejects_mismatched_chain(tmp_path):
    data = simulate_discrete_data(tmp_path)
    other_model = dict(DISCRETE_MODEL, learn_quality=True)
    fit_config = {
        "model": DISCRETE_MODEL,
        "data_csv": str(data),
        "fit": {"sampler": "slice", "iters": 10},
    }
    code, fit_out = run(tmp_path, "fit", fit_config, out_name="fit")
    assert code == 0
    config = {
        "model": other_model,
        "data_csv": str(data),
        "chain_csv": str(fit_out / "chain_00.csv"),
    }
    code, _ = run(tmp_path, "moments", config)
    assert code == 2


def test_classify_loo_smoke(tmp_path):
    rng = np.random.default_rng(5)
    paths = {}
    for name, sigma in (("clumped", 0.02), ("spread", 1.0)):
        theta = GaussianTheta(8.0, [1.0], [sigma])
        draws = [sample_continuous_via_grid(theta, rng).points
                 for _ in range(3)]
        path = tmp_path / ("%s.csv" % name)
        save_point_csv(path, draws, dim=1)
        paths[name] = str(path)
    config = {
        "model": {"family": "continuous-gaussian", "dim": 1},
        "classes": paths,
        "start": {"alpha": 8.0, "rho": 1.0, "sigma": 0.3},
        "predict_draws": 8,
        "fit": {"sampler": "slice", "iters": 30, "burnin": 10},
    }
    code, out = run(tmp_path, "classify-loo", config)
    assert code == 0
    summary = read_summary(out, "classify_summary.json")
    assert summary["n_folds"] == 6
    assert summary["classes"] == {"clumped": 3, "spread": 3}
    assert 0.0 <= summary["accuracy_plugin"] <= 1.0
    assert 0.0 <= summary["accuracy_postavg"] <= 1.0
    assert set(summary["gamma"]) == {"clumped", "spread"}
    assert (out / "loo_results.csv").exists()


def image_toy(tmp_path, rng):
    features = {}
    annotations = []
    for cat in ("urban", "nature"):
        angles = np.concatenate([[np.pi], np.linspace(-0.4, 0.4, 7)])
        color = (np.stack([np.cos(angles), np.sin(angles)], axis=1)
                 * rng.uniform(0.5, 2.0, size=(8, 1)))
        features[cat] = {
            "color": color,
            "sift": rng.normal(size=(8, 3)),
        }
        for _ in range(8):
            shown = rng.choice(np.arange(1, 8), size=5, replace=False)
            annotations.append((cat, tuple("%s_%d" % (cat, i) for i in shown),
                                "%s_0" % cat))
    feat_path = tmp_path / "features.csv"
    ann_path = tmp_path / "annotations.csv"
    save_feature_csv(feat_path, features)
    save_annotation_csv(ann_path, annotations)
    return feat_path, ann_path


def test_image_diversity_conditional(tmp_path):
    feat_path, ann_path = image_toy(tmp_path, np.random.default_rng(6))
    config = {
        "features_csv": str(feat_path),
        "annotations_csv": str(ann_path),
        "k": 6,
        "start": {"sigma": 1.0},
        "priors": {"sigma_color": {"shape": 2.0, "scale": 2.0},
                   "sigma_sift": {"shape": 2.0, "scale": 2.0}},
        "fit": {"sampler": "slice", "iters": 40, "burnin": 10},
    }
    code, out = run(tmp_path, "image-diversity", config)
    assert code == 0
    summary = read_summary(out, "image_diversity_summary.json")
    assert summary["mode"] == "conditional"
    assert summary["param_names"] == ["sigma_color", "sigma_sift"]
    assert summary["subcategories"] == {"urban": 8, "nature": 8}
    assert summary["n_annotations"] == 16
    assert (out / "sigma_chain_00.csv").exists()


def test_image_diversity_plain_mode(tmp_path):
    rng = np.random.default_rng(7)
    feat_path, _ = image_toy(tmp_path, rng)
    samples = []
    for cat in ("urban", "nature"):
        for _ in range(5):
            items = rng.choice(8, size=6, replace=False)
            samples.append((cat, tuple("%s_%d" % (cat, i) for i in items)))
    ann_path = tmp_path / "plain.csv"
    save_annotation_csv(ann_path, samples, mode="plain")
    config = {
        "mode": "plain-kdpp",
        "features_csv": str(feat_path),
        "annotations_csv": str(ann_path),
        "k": 6,
        "start": {"sigma": 1.0},
        "fit": {"sampler": "mh", "iters": 40},
    }
    code, out = run(tmp_path, "image-diversity", config)
    assert code == 0
    summary = read_summary(out, "image_diversity_summary.json")
    assert summary["mode"] == "plain-kdpp"


def test_image_diversity_unknown_item_exit_2(tmp_path, capsys):
    feat_path, _ = image_toy(tmp_path, np.random.default_rng(8))
    ann_path = tmp_path / "bad_ann.csv"
    save_annotation_csv(ann_path, [
        ("urban", tuple("urban_%d" % i for i in range(1, 6)), "urban_99"),
    ])
    config = {
        "features_csv": str(feat_path),
        "annotations_csv": str(ann_path),
        "start": {"sigma": 1.0},
    }
    code, _ = run(tmp_path, "image-diversity", config)
    assert code == 2
    assert "unknown item" in capsys.readouterr().err


def test_config_errors_exit_2(tmp_path, capsys):
    # unknown fit option
    data = simulate_discrete_data(tmp_path)
    config = {
        "model": DISCRETE_MODEL,
        "data_csv": str(data),
        "fit": {"sampler": "slice", "itres": 10},
    }
    code, _ = run(tmp_path, "fit", config)
    assert code == 2
    assert "unknown fit options" in capsys.readouterr().err
    # wrong schema version
    bad = tmp_path / "bad.json"
    bad.write_text('{"schema_version": 99}')
    assert main(["fit", "--config", str(bad), "--out",
                 str(tmp_path / "x")]) == 2
    # missing file
    assert main(["fit", "--config", str(tmp_path / "absent.json"), "--out",
                 str(tmp_path / "x")]) == 2


def test_unknown_model_family_exit_2(tmp_path):
    config = {"model": {"family": "mystery"}, "theta": [1.0], "n_samples": 1}
    code, _ = run(tmp_path, "simulate", config)
    assert code == 2
