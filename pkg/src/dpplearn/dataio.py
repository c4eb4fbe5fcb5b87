"""File formats shared by the command-line harness and tests.

Point patterns: columns sample_id, x1..xD, one row per point; samples with
no points simply have no rows, so loaders take the sample count from the
caller (or the maximum id seen). Chains: iter, one column per parameter,
log_post, accepted. Features: item_id, subcategory, feature_block, v1..vK
with ragged blocks padded by empty cells. Annotations: subcategory, a1..a5
and the chosen item b (conditional mode), or subcategory, a1..a6 (plain
mode). Configs are JSON with a schema_version field.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pandas as pd

SCHEMA_VERSION = 1

__all__ = [
    "SCHEMA_VERSION",
    "save_point_csv",
    "load_point_csv",
    "save_chain_csv",
    "load_chain_csv",
    "save_moment_csv",
    "save_feature_csv",
    "load_feature_csv",
    "save_annotation_csv",
    "load_annotation_csv",
    "save_config",
    "load_config",
]


def _points_of(config):
    pts = config.points if hasattr(config, "points") else np.asarray(config, float)
    return np.asarray(pts, dtype=float)


def save_point_csv(path, configs, dim=None):
    """Write point configurations as sample_id, x1..xD rows."""
    arrays = [_points_of(c) for c in configs]
    widths = {a.shape[1] for a in arrays if a.ndim == 2 and a.size}
    if len(widths) > 1:
        raise ValueError("configurations disagree on dimension: %s" % sorted(widths))
    if dim is None:
        if not widths:
            raise ValueError("cannot infer dimension from empty samples; pass dim")
        dim = widths.pop()
    cols = ["sample_id"] + ["x%d" % (d + 1) for d in range(dim)]
    rows = []
    for i, a in enumerate(arrays):
        for pt in np.asarray(a, dtype=float).reshape(-1, dim):
            rows.append([i] + list(pt))
    frame = pd.DataFrame(rows, columns=cols)
    frame.to_csv(path, index=False)


def load_point_csv(path, n_samples=None):
    """Read point configurations; returns a list of (n_i, D) arrays.

    Samples with no rows come back as empty arrays, which requires
    n_samples (or at least one later sample with points) to know they
    exist.
    """
    frame = pd.read_csv(path)
    cols = [c for c in frame.columns if c.startswith("x")]
    if "sample_id" not in frame.columns or not cols:
        raise ValueError("%s is not a point-pattern CSV" % path)
    dim = len(cols)
    if len(frame) == 0:
        count = 0 if n_samples is None else int(n_samples)
        return [np.zeros((0, dim)) for _ in range(count)]
    ids = frame["sample_id"].to_numpy(dtype=int)
    if ids.min() < 0:
        raise ValueError("negative sample_id")
    count = ids.max() + 1 if n_samples is None else int(n_samples)
    if ids.max() >= count:
        raise ValueError("sample_id %d exceeds n_samples=%d" % (ids.max(), count))
    out = [np.zeros((0, dim)) for _ in range(count)]
    values = frame[cols].to_numpy(dtype=float)
    for i in range(count):
        mask = ids == i
        if np.any(mask):
            out[i] = values[mask]
    return out


def save_chain_csv(path, chain):
    """Write a chain as iter, <params...>, log_post, accepted."""
    frame = pd.DataFrame(chain.samples, columns=list(chain.param_names))
    frame.insert(0, "iter", np.arange(chain.samples.shape[0]))
    frame["log_post"] = chain.log_post
    frame["accepted"] = chain.accepted.astype(int)
    frame.to_csv(path, index=False)


def load_chain_csv(path):
    """Read a chain CSV back into a Chain (settings are not round-tripped)."""
    from .mcmc import Chain

    frame = pd.read_csv(path)
    fixed = {"iter", "log_post", "accepted"}
    names = tuple(c for c in frame.columns if c not in fixed)
    if not names or not fixed <= set(frame.columns):
        raise ValueError("%s is not a chain CSV" % path)
    return Chain(names, frame[list(names)].to_numpy(dtype=float),
                 frame["log_post"].to_numpy(dtype=float),
                 frame["accepted"].to_numpy(dtype=bool))


def save_moment_csv(path, reports):
    """Write MomentReport rows for plotting."""
    rows = [{
        "order": r.order,
        "dimension": "" if r.dimension is None else int(r.dimension) + 1,
        "theoretical": r.theoretical,
        "band_low": r.band_low,
        "band_high": r.band_high,
        "empirical": r.empirical,
        "discrepancy": r.discrepancy,
        "inside_band": int(r.inside_band),
    } for r in reports]
    pd.DataFrame(rows).to_csv(path, index=False)


def save_feature_csv(path, features_by_cat, ids_by_cat=None):
    """Write per-subcategory feature blocks.

    features_by_cat: {subcategory: {block: (N, K_block) array}}; item ids
    default to <subcategory>_<row index>.
    """
    rows = []
    max_width = 0
    for cat, blocks in features_by_cat.items():
        sizes = {np.asarray(b).shape[0] for b in blocks.values()}
        if len(sizes) != 1:
            raise ValueError("blocks of %r disagree on item count" % cat)
        n = sizes.pop()
        ids = (ids_by_cat[cat] if ids_by_cat else
               ["%s_%d" % (cat, i) for i in range(n)])
        if len(ids) != n:
            raise ValueError("%r has %d ids for %d items" % (cat, len(ids), n))
        for block in sorted(blocks):
            mat = np.asarray(blocks[block], dtype=float)
            max_width = max(max_width, mat.shape[1])
            for i in range(n):
                rows.append([ids[i], cat, block] + list(mat[i]))
    cols = (["item_id", "subcategory", "feature_block"]
            + ["v%d" % (j + 1) for j in range(max_width)])
    padded = [r + [""] * (len(cols) - len(r)) for r in rows]
    pd.DataFrame(padded, columns=cols).to_csv(path, index=False)


def load_feature_csv(path):
    """Read feature blocks; returns ({cat: {block: matrix}}, {cat: [item ids]}).

    Item order within a subcategory follows first appearance. Every item
    must carry every block of its subcategory.
    """
    frame = pd.read_csv(path)
    needed = {"item_id", "subcategory", "feature_block"}
    if not needed <= set(frame.columns):
        raise ValueError("%s is not a feature CSV" % path)
    vcols = [c for c in frame.columns if c.startswith("v")]
    features, ids = {}, {}
    for cat, cat_frame in frame.groupby("subcategory", sort=False):
        order = list(dict.fromkeys(cat_frame["item_id"].astype(str)))
        index = {item: i for i, item in enumerate(order)}
        blocks = {}
        for block, block_frame in cat_frame.groupby("feature_block", sort=False):
            vals = block_frame[vcols].to_numpy(dtype=float)
            keep = ~np.all(np.isnan(vals), axis=0)
            vals = vals[:, keep]
            if np.any(np.isnan(vals)):
                raise ValueError("block %r of %r has ragged rows" % (block, cat))
            items = block_frame["item_id"].astype(str).tolist()
            if sorted(items) != sorted(order):
                raise ValueError("block %r of %r misses items" % (block, cat))
            mat = np.empty((len(order), vals.shape[1]))
            for item, row in zip(items, vals):
                mat[index[item]] = row
            blocks[str(block)] = mat
        features[str(cat)] = blocks
        ids[str(cat)] = order
    return features, ids


def save_annotation_csv(path, samples, mode="conditional"):
    """Write annotation rows.

    conditional mode: (subcategory, 5 partial ids, chosen id) per sample;
    plain mode: (subcategory, k item ids) with a uniform k.
    """
    rows = []
    if mode == "conditional":
        for cat, partial, choice in samples:
            if len(partial) != 5:
                raise ValueError("conditional rows fix exactly 5 items")
            rows.append([cat] + list(partial) + [choice])
        cols = ["subcategory"] + ["a%d" % (j + 1) for j in range(5)] + ["b"]
    elif mode == "plain":
        sizes = {len(items) for _, items in samples}
        if len(sizes) > 1:
            raise ValueError("plain rows must share one size")
        k = sizes.pop() if sizes else 6
        rows = [[cat] + list(items) for cat, items in samples]
        cols = ["subcategory"] + ["a%d" % (j + 1) for j in range(k)]
    else:
        raise ValueError("mode must be 'conditional' or 'plain'")
    pd.DataFrame(rows, columns=cols).to_csv(path, index=False)


def load_annotation_csv(path, mode="conditional"):
    """Read annotation rows; item references stay as raw id strings."""
    frame = pd.read_csv(path)
    acols = sorted((c for c in frame.columns if c.startswith("a")),
                   key=lambda c: int(c[1:]))
    if "subcategory" not in frame.columns or not acols:
        raise ValueError("%s is not an annotation CSV" % path)
    out = []
    if mode == "conditional":
        if "b" not in frame.columns:
            raise ValueError("conditional annotations need a 'b' column")
        for _, row in frame.iterrows():
            out.append((str(row["subcategory"]),
                        tuple(str(row[c]) for c in acols), str(row["b"])))
    elif mode == "plain":
        for _, row in frame.iterrows():
            out.append((str(row["subcategory"]),
                        tuple(str(row[c]) for c in acols)))
    else:
        raise ValueError("mode must be 'conditional' or 'plain'")
    return out


def save_config(path, config):
    config = dict(config)
    config.setdefault("schema_version", SCHEMA_VERSION)
    Path(path).write_text(json.dumps(config, indent=2, sort_keys=True) + "\n")


def load_config(path):
    try:
        config = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValueError("cannot read config %s: %s" % (path, exc)) from None
    if not isinstance(config, dict):
        raise ValueError("config must be a JSON object")
    version = config.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ValueError("config schema_version %r is not %d"
                         % (version, SCHEMA_VERSION))
    return config
