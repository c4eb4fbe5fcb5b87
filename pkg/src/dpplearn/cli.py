"""Command-line harness: simulate point patterns, fit kernel parameters,
check moments, classify by repulsion, and learn image-diversity weights.

Every command reads a JSON config, writes outputs under --out, and embeds
the fully resolved config plus a version string in a summary JSON. Exit
codes: 0 success, 2 config error, 3 numerical failure, 4 bounded step
unresolved.

Config schema (schema_version 1)
--------------------------------
Shared model block::

    "model": {
      "family": "discrete-gaussian" | "polynomial" | "continuous-gaussian",
      "measure": "dpp" | "kdpp",              # default "dpp"
      "k": 10,                                # kdpp only
      "priors": {"alpha": {"shape": 0.001, "scale": 0.001}, ...},
      # discrete-gaussian: "grid": {"n_side", "spacing", "dim", "centered"}
      #   or "points": [[...], ...]; optional "learn_quality" (default true)
      # polynomial: "points": [[...], ...]
      # continuous-gaussian: "dim" (default 2), "isotropic" (default true)
    }

Parameter values ("theta", "start") are a list in param_names order or a
dict keyed by exact names, or by group names broadcast over numeric
suffixes ({"quality": 0.5} fills quality_1, quality_2). Relative CSV paths
resolve against the config file's directory.

Per command:

simulate: "model", "theta", "n_samples", optional "grid" {"box", "spacing"}
    for the continuous sampler. Writes points.csv plus the provenance
    sidecar simulate_summary.json.
fit: "model", "data_csv", optional "n_samples", "start", "fit" block with
    sampler, chains, iters, burnin, thin, scales, widths, max_expansions,
    overdispersion, start_count, max_count, step, tol. CLI flags override
    the block. Writes one chain_XX.csv per chain (ascent_XX.csv for mle)
    and fit_summary.json. Chains store every iteration; burnin and thin
    only shape the reported summaries.
moments: "model", "data_csv", "chain_csv", optional "n_samples", "orders",
    "burnin", "thin", "band". Writes moments.csv and moments_summary.json.
classify-loo: "model" (continuous-gaussian), "classes" {name: csv},
    optional "n_samples" {name: count}, "start", "fit", "predict_draws".
    Writes loo_results.csv and classify_summary.json.
image-diversity: "features_csv", "annotations_csv", "mode" of
    "conditional" or "plain-kdpp", optional "k" (default 6), "normalize",
    "priors", "start", "fit". Writes sigma_chain_XX.csv per chain and
    image_diversity_summary.json.
"""

from __future__ import annotations

import argparse
import json
import subprocess
import sys
import time
import warnings
from pathlib import Path

import numpy as np
import pandas as pd
from scipy.special import logsumexp

from .conditional import Annotation, ConditionalKdppModel, PooledKdppModel
from .dataio import (load_annotation_csv, load_chain_csv, load_config,
                     load_feature_csv, load_point_csv, save_chain_csv,
                     save_moment_csv, save_point_csv)
from .kernels import GroundSet, square_grid
from .likelihood import (BoundedLogPosteriorTarget, ContinuousGaussianFamily,
                         DiscreteGaussianFamily, FeatureKernelFamily,
                         InvGammaPrior, LogPosteriorTarget, ModelSpec,
                         PolynomialFamily, dpp_log_likelihood,
                         match_to_ground)
from .linalg import FactorizationError
from .mcmc import (BoundsUnresolvedError, bounded_mh, bounded_slice,
                   gelman_rubin, rw_mh, slice_univariate)
from .mle import gradient_ascent
from .moments import moment_check
from .sampling import ContinuousGridSampler, sample_dpp, sample_kdpp

SAMPLERS = ("mh", "slice", "bounded-mh", "bounded-slice", "mle")

FIT_DEFAULTS = {
    "sampler": "slice",
    "chains": 1,
    "iters": 1000,
    "burnin": 0,
    "thin": 1,
    "scales": 0.1,
    "widths": 1.0,
    "max_expansions": 64,
    "overdispersion": 0.0,
    "start_count": 8,
    "max_count": 1 << 20,
    "step": 0.1,
    "tol": 1e-5,
}


class ConfigError(ValueError):
    """The config file or CLI flags are invalid."""


def _version_string():
    try:
        from importlib.metadata import version

        base = version("dpplearn")
    except Exception:
        base = "0.1.0"
    try:
        out = subprocess.run(
            ["git", "describe", "--tags", "--always", "--dirty"],
            cwd=Path(__file__).resolve().parent, capture_output=True,
            text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return "v%s+g%s" % (base, out.stdout.strip())
    except Exception:
        pass
    return "v" + base


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def _write_summary(path, summary):
    payload = _jsonable(summary)
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _require(cfg, key, context="config"):
    if key not in cfg:
        raise ConfigError("%s needs %r" % (context, key))
    return cfg[key]


def _priors_from_config(cfg):
    priors = {}
    for name, spec in (cfg.get("priors") or {}).items():
        if not isinstance(spec, dict) or set(spec) - {"shape", "scale"}:
            raise ConfigError("prior for %r must be {shape, scale}" % name)
        priors[name] = InvGammaPrior(float(spec.get("shape", 0.001)),
                                     float(spec.get("scale", 0.001)))
    return priors


def _model_from_config(model_cfg):
    if not isinstance(model_cfg, dict):
        raise ConfigError("'model' must be an object")
    family_name = _require(model_cfg, "family", "model")
    if family_name == "discrete-gaussian":
        if "grid" in model_cfg:
            g = model_cfg["grid"]
            ground = square_grid(int(_require(g, "n_side", "model.grid")),
                                 spacing=float(g.get("spacing", 1.0)),
                                 dim=int(g.get("dim", 2)),
                                 centered=bool(g.get("centered", True)))
        elif "points" in model_cfg:
            ground = GroundSet(np.asarray(model_cfg["points"], dtype=float))
        else:
            raise ConfigError("discrete-gaussian needs 'grid' or 'points'")
        family = DiscreteGaussianFamily(
            ground, learn_quality=bool(model_cfg.get("learn_quality", True)))
    elif family_name == "polynomial":
        pts = np.asarray(_require(model_cfg, "points", "model"), dtype=float)
        family = PolynomialFamily(GroundSet(pts))
    elif family_name == "continuous-gaussian":
        family = ContinuousGaussianFamily(
            dim=int(model_cfg.get("dim", 2)),
            isotropic=bool(model_cfg.get("isotropic", True)))
    else:
        raise ConfigError("unknown model family %r" % family_name)
    measure = model_cfg.get("measure", "dpp")
    k = model_cfg.get("k")
    return ModelSpec(family, measure=measure, k=k,
                     priors=_priors_from_config(model_cfg))


def _theta_vector(param_names, value, context="theta"):
    names = tuple(param_names)
    if isinstance(value, (list, tuple, np.ndarray)):
        vec = np.asarray(value, dtype=float).ravel()
        if vec.size != len(names):
            raise ConfigError("%s has %d values for parameters %s"
                              % (context, vec.size, list(names)))
        return vec
    if not isinstance(value, dict):
        raise ConfigError("%s must be a list or a dict" % context)
    if set(value) == set(names):
        return np.array([float(value[n]) for n in names])
    groups = {}
    for i, name in enumerate(names):
        head, _, tail = name.rpartition("_")
        base = head if head and tail.isdigit() else name
        groups.setdefault(base, []).append(i)
    if set(value) == set(groups):
        vec = np.empty(len(names))
        for base, idx in groups.items():
            vec[idx] = np.broadcast_to(np.asarray(value[base], dtype=float),
                                       (len(idx),))
        return vec
    if set(value) == {"sigma"} and all(n.startswith("sigma_") for n in names):
        return np.full(len(names), float(value["sigma"]))
    raise ConfigError("%s keys %s do not match parameters %s"
                      % (context, sorted(value), list(names)))


def _per_param(value, names, default, context):
    if isinstance(value, dict):
        return np.array([float(value.get(n, default)) for n in names])
    return np.broadcast_to(np.asarray(value, dtype=float), (len(names),)).copy()


def _resolve_fit(cfg, args):
    fit = dict(FIT_DEFAULTS)
    block = cfg.get("fit") or {}
    if not isinstance(block, dict):
        raise ConfigError("'fit' must be an object")
    unknown = set(block) - set(FIT_DEFAULTS)
    if unknown:
        raise ConfigError("unknown fit options: %s" % sorted(unknown))
    fit.update(block)
    for flag in ("sampler", "chains", "iters", "burnin", "thin"):
        value = getattr(args, flag.replace("-", "_"), None)
        if value is not None:
            fit[flag] = value
    if fit["sampler"] not in SAMPLERS:
        raise ConfigError("sampler must be one of %s" % (SAMPLERS,))
    for key in ("chains", "iters", "burnin", "thin"):
        fit[key] = int(fit[key])
    if fit["chains"] < 1 or fit["iters"] < 1:
        raise ConfigError("chains and iters must be >= 1")
    if fit["burnin"] < 0 or fit["thin"] < 1:
        raise ConfigError("burnin must be >= 0 and thin >= 1")
    return fit


def _load_data(model, cfg, base):
    path = Path(_require(cfg, "data_csv", "config"))
    if not path.is_absolute():
        path = base / path
    configs = load_point_csv(path, cfg.get("n_samples"))
    if not configs:
        raise ConfigError("%s holds no samples" % path)
    if model.discrete:
        return match_to_ground(model.kernel.ground, configs)
    return configs


def _start_vector(model, cfg, key="start"):
    if key in cfg:
        return _theta_vector(model.param_names, cfg[key], key)
    return np.ones(len(model.param_names))


def _run_chains(model, data, start, fit, seed_path):
    """Run fit['chains'] chains; returns (chains, runtime_seconds).

    Chain j draws from the stream seeded by seed_path + [j]; start jitter
    uses a separate stream so overdispersion never shifts the sampling
    stream itself.
    """
    names = tuple(model.param_names)
    sampler = fit["sampler"]
    if sampler in ("mh", "slice"):
        target = LogPosteriorTarget(model, data)
    else:
        target = BoundedLogPosteriorTarget(model, data,
                                           start_count=int(fit["start_count"]),
                                           max_count=int(fit["max_count"]))
    scales = _per_param(fit["scales"], names, FIT_DEFAULTS["scales"], "scales")
    widths = _per_param(fit["widths"], names, FIT_DEFAULTS["widths"], "widths")
    chains = []
    began = time.perf_counter()
    for j in range(fit["chains"]):
        theta = np.asarray(start, dtype=float).copy()
        if fit["overdispersion"] > 0.0:
            jitter = np.random.default_rng(list(seed_path) + [j, 1])
            theta = theta * np.exp(float(fit["overdispersion"])
                                   * jitter.standard_normal(theta.size))
        rng = np.random.default_rng(list(seed_path) + [j])
        x0 = target.x0(theta)
        if sampler == "mh":
            chain = rw_mh(target, x0, fit["iters"], rng, scales=scales)
        elif sampler == "slice":
            chain = slice_univariate(target, x0, fit["iters"], rng,
                                     widths=widths,
                                     max_expansions=int(fit["max_expansions"]))
        elif sampler == "bounded-mh":
            chain = bounded_mh(target, x0, fit["iters"], rng, scales=scales)
        else:
            chain = bounded_slice(target, x0, fit["iters"], rng,
                                  widths=widths,
                                  max_expansions=int(fit["max_expansions"]))
        chains.append(chain)
    return chains, time.perf_counter() - began


def _pooled_draws(chains, burnin, thin):
    return np.vstack([c.draws(burnin, thin) for c in chains])


def _posterior_summary(draws, names):
    qs = np.quantile(draws, [0.05, 0.5, 0.95], axis=0)
    return {name: {"mean": float(np.mean(draws[:, i])),
                   "sd": float(np.std(draws[:, i])),
                   "q05": float(qs[0, i]),
                   "q50": float(qs[1, i]),
                   "q95": float(qs[2, i])}
            for i, name in enumerate(names)}


def _psrf_block(chains, names, burnin, thin):
    if len(chains) < 2:
        return None, None
    values = gelman_rubin(chains, burnin=burnin, thin=thin)
    per_param = {name: float(v) for name, v in zip(names, values)}
    return per_param, float(np.mean(values))


def _resolved(config, command, seed, fit=None, out=None):
    resolved = json.loads(json.dumps(config))
    resolved["command"] = command
    resolved["seed"] = seed
    if fit is not None:
        resolved["fit"] = dict(fit)
    if out is not None:
        resolved["out"] = str(out)
    return resolved


def _cmd_simulate(config, args, out):
    seed = args.seed
    if seed is None:
        raise ConfigError("simulate needs an explicit --seed")
    model = _model_from_config(_require(config, "model", "config"))
    theta = _theta_vector(model.param_names,
                          _require(config, "theta", "config"))
    n_samples = int(_require(config, "n_samples", "config"))
    if n_samples < 0:
        raise ConfigError("n_samples must be >= 0")
    rng = np.random.default_rng([seed, 0])
    began = time.perf_counter()
    analytic = None
    grid_expected = None
    if model.discrete:
        L = model.kernel.build(theta)
        dim = model.kernel.ground.items.shape[1]
        if model.measure == "dpp":
            lam = np.clip(np.linalg.eigvalsh(L), 0.0, None)
            analytic = float(np.sum(lam / (1.0 + lam)))
            draws = [model.kernel.ground.items[sample_dpp(L, rng)]
                     for _ in range(n_samples)]
        else:
            analytic = float(model.k)
            draws = [model.kernel.ground.items[sample_kdpp(L, model.k, rng)]
                     for _ in range(n_samples)]
    else:
        family = model.kernel
        dim = family.dim
        grid_cfg = config.get("grid") or {}
        sampler = ContinuousGridSampler(family.theta(theta),
                                        box=grid_cfg.get("box"),
                                        spacing=grid_cfg.get("spacing"))
        grid_expected = (float(model.k) if model.measure == "kdpp"
                         else sampler.expected_cardinality())
        if model.measure == "dpp":
            spectrum = family.spectrum(theta)
            count = spectrum.count_for_trace_gap(1e-8, 1 << 20)
            lam = spectrum.values(count)
            analytic = float(np.sum(lam / (1.0 + lam)))
        else:
            analytic = float(model.k)
        k = model.k if model.measure == "kdpp" else None
        draws = [sampler.draw(rng, k=k).points for _ in range(n_samples)]
    runtime = time.perf_counter() - began
    save_point_csv(out / "points.csv", draws, dim=dim)
    counts = [int(np.asarray(d).shape[0]) for d in draws]
    summary = {
        "command": "simulate",
        "version": _version_string(),
        "seed": seed,
        "config": _resolved(config, "simulate", seed, out=out),
        "n_samples": n_samples,
        "cardinality": {
            "counts": counts,
            "mean": float(np.mean(counts)) if counts else None,
            "min": int(np.min(counts)) if counts else None,
            "max": int(np.max(counts)) if counts else None,
        },
        "analytic_expected_cardinality": analytic,
        "grid_expected_cardinality": grid_expected,
        "runtime_seconds": runtime,
        "outputs": ["points.csv"],
    }
    _write_summary(out / "simulate_summary.json", summary)
    return 0


def _mle_fit(model, data, start, fit, seed, out):
    results = []
    began = time.perf_counter()
    for j in range(fit["chains"]):
        theta = start.copy()
        if fit["overdispersion"] > 0.0:
            jitter = np.random.default_rng([seed, j, 1])
            theta = theta * np.exp(float(fit["overdispersion"])
                                   * jitter.standard_normal(theta.size))
        results.append(gradient_ascent(theta, data, model,
                                       step=float(fit["step"]),
                                       max_iters=fit["iters"],
                                       tol=float(fit["tol"])))
    runtime = time.perf_counter() - began
    names = list(model.param_names)
    starts = []
    for j, res in enumerate(results):
        frame = pd.DataFrame(res.trace_theta, columns=names)
        frame.insert(0, "iter", np.arange(res.trace_objective.size))
        frame["objective"] = res.trace_objective
        frame.to_csv(out / ("ascent_%02d.csv" % j), index=False)
        starts.append({
            "theta": dict(zip(names, res.theta)),
            "objective": float(res.objective),
            "gradient_norm": float(np.linalg.norm(res.theta * res.gradient)),
            "converged": bool(res.converged),
            "n_iters": int(res.n_iters),
            "message": res.message,
        })
    return starts, runtime, ["ascent_%02d.csv" % j for j in range(len(results))]


def _cmd_fit(config, args, out):
    seed = 0 if args.seed is None else args.seed
    model = _model_from_config(_require(config, "model", "config"))
    fit = _resolve_fit(config, args)
    data = _load_data(model, config, Path(args.config).resolve().parent)
    start = _start_vector(model, config)
    if not model.discrete and model.measure == "kdpp" \
            and fit["sampler"] in ("mh", "slice", "mle"):
        raise ConfigError("continuous k-DPP normalizers are only available "
                          "as bounds; use bounded-mh or bounded-slice")
    if fit["sampler"] == "mle" and not model.discrete:
        raise ConfigError("mle needs a discrete kernel family")
    names = list(model.param_names)
    summary = {
        "command": "fit",
        "version": _version_string(),
        "seed": seed,
        "config": _resolved(config, "fit", seed, fit=fit, out=out),
        "sampler": fit["sampler"],
        "param_names": names,
    }
    if fit["sampler"] == "mle":
        starts, runtime, outputs = _mle_fit(model, data, start, fit, seed, out)
        summary["starts"] = starts
        summary["runtime_seconds"] = runtime
        summary["outputs"] = outputs
    else:
        chains, runtime = _run_chains(model, data, start, fit, [seed])
        outputs = []
        for j, chain in enumerate(chains):
            name = "chain_%02d.csv" % j
            save_chain_csv(out / name, chain)
            outputs.append(name)
        draws = _pooled_draws(chains, fit["burnin"], fit["thin"])
        psrf, psrf_mean = _psrf_block(chains, names, fit["burnin"], fit["thin"])
        summary.update({
            "chains": fit["chains"],
            "iters": fit["iters"],
            "burnin": fit["burnin"],
            "thin": fit["thin"],
            "posterior": _posterior_summary(draws, names),
            "acceptance_rate": [c.acceptance_rate for c in chains],
            "psrf": psrf,
            "psrf_mean": psrf_mean,
            "runtime_seconds": runtime,
            "outputs": outputs,
        })
    _write_summary(out / "fit_summary.json", summary)
    return 0


def _cmd_moments(config, args, out):
    seed = 0 if args.seed is None else args.seed
    model = _model_from_config(_require(config, "model", "config"))
    if model.measure != "dpp":
        raise ConfigError("moment checks apply to DPP models")
    base = Path(args.config).resolve().parent
    data = _load_data(model, config, base)
    chain_path = Path(_require(config, "chain_csv", "config"))
    if not chain_path.is_absolute():
        chain_path = base / chain_path
    chain = load_chain_csv(chain_path)
    if tuple(chain.param_names) != tuple(model.param_names):
        raise ConfigError("chain parameters %s do not match the model's %s"
                          % (list(chain.param_names), list(model.param_names)))
    orders = tuple(int(o) for o in config.get("orders", (0, 2)))
    reports = moment_check(chain, data, model, orders=orders,
                           burnin=int(config.get("burnin", 0)),
                           thin=int(config.get("thin", 1)),
                           band=float(config.get("band", 0.95)))
    save_moment_csv(out / "moments.csv", reports)
    summary = {
        "command": "moments",
        "version": _version_string(),
        "seed": seed,
        "config": _resolved(config, "moments", seed, out=out),
        "n_reports": len(reports),
        "all_inside_band": bool(all(r.inside_band for r in reports)),
        "reports": [{
            "order": r.order,
            "dimension": None if r.dimension is None else int(r.dimension),
            "theoretical": r.theoretical,
            "band_low": r.band_low,
            "band_high": r.band_high,
            "empirical": r.empirical,
            "discrepancy": r.discrepancy,
            "inside_band": bool(r.inside_band),
        } for r in reports],
        "outputs": ["moments.csv"],
    }
    _write_summary(out / "moments_summary.json", summary)
    return 0


def _gamma_summary(draws, names):
    """Posterior summaries of the repulsion measure gamma = sigma / rho."""
    names = list(names)
    out = {}
    if "rho" in names and "sigma" in names:
        gam = draws[:, names.index("sigma")] / draws[:, names.index("rho")]
        out["gamma"] = _posterior_summary(gam[:, None], ["gamma"])["gamma"]
        return out
    d = 1
    while "rho_%d" % d in names and "sigma_%d" % d in names:
        gam = (draws[:, names.index("sigma_%d" % d)]
               / draws[:, names.index("rho_%d" % d)])
        key = "gamma_%d" % d
        out[key] = _posterior_summary(gam[:, None], [key])[key]
        d += 1
    if not out:
        raise ConfigError("model has no rho/sigma pair to form gamma")
    return out


def _cmd_classify_loo(config, args, out):
    seed = 0 if args.seed is None else args.seed
    model = _model_from_config(_require(config, "model", "config"))
    if not isinstance(model.kernel, ContinuousGaussianFamily):
        raise ConfigError("classification needs the continuous-gaussian family")
    if model.measure != "dpp":
        raise ConfigError("classification uses DPP likelihoods")
    fit = _resolve_fit(config, args)
    if fit["sampler"] == "mle":
        raise ConfigError("classification needs posterior draws, not mle")
    classes_cfg = _require(config, "classes", "config")
    if not isinstance(classes_cfg, dict) or len(classes_cfg) < 2:
        raise ConfigError("need at least two classes")
    base = Path(args.config).resolve().parent
    hints = config.get("n_samples") or {}
    classes = {}
    for name in sorted(classes_cfg):
        path = Path(classes_cfg[name])
        if not path.is_absolute():
            path = base / path
        configs = load_point_csv(path, hints.get(name))
        if not configs:
            raise ConfigError("class %r holds no samples" % name)
        classes[name] = configs
    start = _start_vector(model, config)
    names = list(model.param_names)
    predict_draws = config.get("predict_draws")
    began = time.perf_counter()

    def posterior(training, seed_path):
        chains, _ = _run_chains(model, training, start, fit, seed_path)
        draws = _pooled_draws(chains, fit["burnin"], fit["thin"])
        if predict_draws is not None and draws.shape[0] > int(predict_draws):
            pick = np.linspace(0, draws.shape[0] - 1, int(predict_draws))
            draws = draws[pick.astype(int)]
        return draws

    class_names = list(classes)
    full = {name: posterior(classes[name], [seed, ci, 0])
            for ci, name in enumerate(class_names)}
    rows = []
    skipped = []
    fold = 0
    for ci, name in enumerate(class_names):
        for i, held in enumerate(classes[name]):
            if len(classes[name]) < 2:
                message = ("class %r has a single sample; skipping its fold"
                           % name)
                warnings.warn(message)
                skipped.append(message)
                continue
            training = [s for j, s in enumerate(classes[name]) if j != i]
            loo = posterior(training, [seed, ci, i + 1])
            row = {"fold": fold, "true_class": name, "sample_index": i,
                   "held_out_points": int(np.asarray(held).shape[0])}
            for other in class_names:
                draws = loo if other == name else full[other]
                mean_theta = draws.mean(axis=0)
                row["loglik_plugin_%s" % other] = float(
                    dpp_log_likelihood(mean_theta, [held], model))
                lls = np.array([dpp_log_likelihood(th, [held], model)
                                for th in draws])
                row["loglik_postavg_%s" % other] = float(
                    logsumexp(lls) - np.log(lls.size))
            for kind in ("plugin", "postavg"):
                scores = {c: row["loglik_%s_%s" % (kind, c)]
                          for c in class_names}
                row["predicted_%s" % kind] = max(scores, key=scores.get)
            row["correct_plugin"] = row["predicted_plugin"] == name
            row["correct_postavg"] = row["predicted_postavg"] == name
            rows.append(row)
            fold += 1
    runtime = time.perf_counter() - began
    if not rows:
        raise ConfigError("every fold was skipped; nothing to classify")
    pd.DataFrame(rows).to_csv(out / "loo_results.csv", index=False)
    gammas = {name: _gamma_summary(full[name], names) for name in class_names}
    summary = {
        "command": "classify-loo",
        "version": _version_string(),
        "seed": seed,
        "config": _resolved(config, "classify-loo", seed, fit=fit, out=out),
        "classes": {name: len(classes[name]) for name in class_names},
        "n_folds": len(rows),
        "n_skipped": len(skipped),
        "warnings": skipped,
        "accuracy_plugin": float(np.mean([r["correct_plugin"] for r in rows])),
        "accuracy_postavg": float(np.mean([r["correct_postavg"] for r in rows])),
        "gamma": gammas,
        "runtime_seconds": runtime,
        "outputs": ["loo_results.csv"],
    }
    _write_summary(out / "classify_summary.json", summary)
    return 0


def _cmd_image_diversity(config, args, out):
    seed = 0 if args.seed is None else args.seed
    mode = config.get("mode", "conditional")
    if mode not in ("conditional", "plain-kdpp"):
        raise ConfigError("mode must be 'conditional' or 'plain-kdpp'")
    fit = _resolve_fit(config, args)
    if fit["sampler"] not in ("mh", "slice"):
        raise ConfigError("annotation models support the mh and slice "
                          "samplers only")
    base = Path(args.config).resolve().parent
    feat_path = Path(_require(config, "features_csv", "config"))
    if not feat_path.is_absolute():
        feat_path = base / feat_path
    ann_path = Path(_require(config, "annotations_csv", "config"))
    if not ann_path.is_absolute():
        ann_path = base / ann_path
    features, ids = load_feature_csv(feat_path)
    families = {
        cat: FeatureKernelFamily(GroundSet(features=blocks),
                                 normalize=bool(config.get("normalize", True)))
        for cat, blocks in features.items()
    }
    index = {cat: {item: i for i, item in enumerate(ids[cat])} for cat in ids}

    def position(cat, item):
        if cat not in index:
            raise ConfigError("annotation names unknown subcategory %r" % cat)
        if item not in index[cat]:
            raise ConfigError("annotation references unknown item %r in %r"
                              % (item, cat))
        return index[cat][item]

    k = int(config.get("k", 6))
    priors = _priors_from_config(config)
    if mode == "conditional":
        raw = load_annotation_csv(ann_path, "conditional")
        model = ConditionalKdppModel(families, k=k, priors=priors)
        data = [Annotation(cat, tuple(position(cat, a) for a in partial),
                           position(cat, choice))
                for cat, partial, choice in raw]
    else:
        raw = load_annotation_csv(ann_path, "plain")
        model = PooledKdppModel(families, k=k, priors=priors)
        data = [(cat, tuple(position(cat, a) for a in items))
                for cat, items in raw]
    if not data:
        raise ConfigError("no annotations to fit")
    start = _start_vector(model, config)
    chains, runtime = _run_chains(model, data, start, fit, [seed])
    names = list(model.param_names)
    outputs = []
    for j, chain in enumerate(chains):
        name = "sigma_chain_%02d.csv" % j
        save_chain_csv(out / name, chain)
        outputs.append(name)
    draws = _pooled_draws(chains, fit["burnin"], fit["thin"])
    psrf, psrf_mean = _psrf_block(chains, names, fit["burnin"], fit["thin"])
    summary = {
        "command": "image-diversity",
        "version": _version_string(),
        "seed": seed,
        "config": _resolved(config, "image-diversity", seed, fit=fit, out=out),
        "mode": mode,
        "k": k,
        "subcategories": {cat: len(ids[cat]) for cat in sorted(ids)},
        "n_annotations": len(data),
        "param_names": names,
        "posterior": _posterior_summary(draws, names),
        "acceptance_rate": [c.acceptance_rate for c in chains],
        "psrf": psrf,
        "psrf_mean": psrf_mean,
        "runtime_seconds": runtime,
        "outputs": outputs,
    }
    _write_summary(out / "image_diversity_summary.json", summary)
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "fit": _cmd_fit,
    "moments": _cmd_moments,
    "classify-loo": _cmd_classify_loo,
    "image-diversity": _cmd_image_diversity,
}


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="dpplearn",
        description="Learn DPP and k-DPP kernel parameters from samples.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
            ("simulate", "draw point patterns from a configured model"),
            ("fit", "fit kernel parameters by MCMC or gradient ascent"),
            ("moments", "compare posterior moments against the data"),
            ("classify-loo", "leave-one-out classification by repulsion"),
            ("image-diversity", "learn feature-block scales from annotations")):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", required=True, help="JSON config path")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--seed", type=int, default=None, help="RNG seed")
        if name in ("fit", "classify-loo", "image-diversity"):
            sp.add_argument("--chains", type=int, default=None)
            sp.add_argument("--iters", type=int, default=None)
            sp.add_argument("--burnin", type=int, default=None)
            sp.add_argument("--thin", type=int, default=None)
            sp.add_argument("--sampler", choices=SAMPLERS, default=None)
    return parser


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        config = load_config(args.config)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        return _COMMANDS[args.command](config, args, out)
    except BoundsUnresolvedError as exc:
        print("bounded step unresolved: %s" % exc, file=sys.stderr)
        return 4
    except (FactorizationError, np.linalg.LinAlgError,
            FloatingPointError) as exc:
        print("numerical failure: %s" % exc, file=sys.stderr)
        return 3
    except (ConfigError, ValueError, KeyError, OSError) as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
