"""Extremely randomized trees with entropy splits and probability output.

Every tree sees the full training set (no bootstrap). At each impure
node a random feature subset of size ceil(fraction * d) is drawn, one
uniform threshold per candidate inside that feature's node range, and
the candidate with the highest information gain wins (first on ties).
All randomness flows through a per-tree generator seeded by
(seed, tree_index), so any parallel schedule gives identical forests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .. import backends
from ..serialize import read_blob, write_blob

__all__ = [
    "ForestConfig",
    "ForestModel",
    "forest_fit",
    "forest_predict_proba",
    "dump_audits",
    "save_forest",
    "load_forest",
]


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 200
    max_features_fraction: float = 0.1
    seed: object = 42  # int or tuple of ints (stream spawning)
    min_samples_split: int = 2
    debug_audit: bool = False

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if not 0.0 < self.max_features_fraction <= 1.0:
            raise ValueError("max_features_fraction must be in (0, 1]")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")


@dataclass
class _Tree:
    feature: np.ndarray    # [n_nodes], -1 marks a leaf
    threshold: np.ndarray  # [n_nodes], NaN at leaves
    left: np.ndarray       # [n_nodes], child ids, -1 at leaves
    right: np.ndarray
    leaf_id: np.ndarray    # [n_nodes], row into hist, -1 at internals
    hist: np.ndarray       # [n_leaves, c] int64 class counts


@dataclass
class ForestModel:
    trees: list
    n_classes: int
    n_features: int
    config: ForestConfig
    audits: list = field(default_factory=list)  # per-tree, debug mode only


def _seed_tuple(seed):
    if isinstance(seed, (tuple, list)):
        return tuple(int(v) for v in seed)
    return (int(seed),)


def _grow_tree(x, y, n_classes, m, rng, min_split, audit):
    """One tree; nodes stored in creation order, children left-first."""
    n = x.shape[0]
    nodes = [None]
    hists = []
    stack = [(np.arange(n, dtype=np.int64), 0)]
    while stack:
        idx, nid = stack.pop()
        counts = np.bincount(y[idx], minlength=n_classes).astype(np.int64)
        if idx.size < min_split or int((counts > 0).sum()) <= 1:
            nodes[nid] = (-1, math.nan, -1, -1, len(hists))
            hists.append(counts)
            continue
        feats = rng.choice(x.shape[1], size=m, replace=False).astype(np.int64)
        u = rng.random(m)
        best, thr, gains = backends.split_scan(x, y, idx, feats, u, n_classes)
        if audit is not None:
            audit.append({
                "node": nid,
                "n": int(idx.size),
                "features": feats.copy(),
                "thresholds": thr.copy(),
                "gains": gains.copy(),
                "chosen": int(best),
            })
        if best < 0:
            nodes[nid] = (-1, math.nan, -1, -1, len(hists))
            hists.append(counts)
            continue
        f = int(feats[best])
        t = float(thr[best])
        mask = x[idx, f] <= t
        lid = len(nodes)
        nodes.append(None)
        rid = len(nodes)
        nodes.append(None)
        nodes[nid] = (f, t, lid, rid, -1)
        stack.append((idx[~mask], rid))
        stack.append((idx[mask], lid))  # popped first: left-first DFS

    return _Tree(
        feature=np.array([r[0] for r in nodes], dtype=np.int64),
        threshold=np.array([r[1] for r in nodes], dtype=np.float64),
        left=np.array([r[2] for r in nodes], dtype=np.int64),
        right=np.array([r[3] for r in nodes], dtype=np.int64),
        leaf_id=np.array([r[4] for r in nodes], dtype=np.int64),
        hist=np.vstack(hists).astype(np.int64),
    )


def forest_fit(x, y, config=None):
    config = config or ForestConfig()
    x = np.ascontiguousarray(getattr(x, "values", x), dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.int64)
    if x.ndim != 2 or x.shape[0] != y.size:
        raise ValueError("x must be [n, d] with one label per row")
    if x.shape[0] < 2:
        raise ValueError("need at least 2 samples")
    n_classes = int(y.max()) + 1
    if np.unique(y).size < 2:
        raise ValueError("single class: nothing to separate")
    d = x.shape[1]
    m = max(1, math.ceil(config.max_features_fraction * d))

    base = _seed_tuple(config.seed)
    trees = []
    audits = []
    for t in range(config.n_trees):
        rng = np.random.default_rng(base + (t,))
        audit = [] if config.debug_audit else None
        trees.append(_grow_tree(x, y, n_classes, m, rng,
                                config.min_samples_split, audit))
        if audit is not None:
            audits.append(audit)
    return ForestModel(trees=trees, n_classes=n_classes, n_features=d,
                       config=config, audits=audits)


def _route(tree, x):
    """Leaf hist row index for every row of x."""
    node = np.zeros(x.shape[0], dtype=np.int64)
    while True:
        f = tree.feature[node]
        active = f >= 0
        if not active.any():
            break
        rows = np.nonzero(active)[0]
        cur = node[rows]
        go_left = x[rows, f[rows]] <= tree.threshold[cur]
        node[rows] = np.where(go_left, tree.left[cur], tree.right[cur])
    return tree.leaf_id[node]


def forest_predict_proba(model, x):
    """Average per-tree leaf class frequencies; rows sum to 1."""
    x = np.ascontiguousarray(getattr(x, "values", x), dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.n_features:
        raise ValueError(
            "feature width %d does not match fit width %d"
            % (x.shape[1] if x.ndim == 2 else -1, model.n_features)
        )
    total = np.zeros((x.shape[0], model.n_classes))
    for tree in model.trees:
        freq = tree.hist / tree.hist.sum(axis=1, keepdims=True)
        total += freq[_route(tree, x)]
    return total / len(model.trees)


def dump_audits(model):
    """Per-node split audit as text; requires debug_audit fits."""
    if not model.audits:
        return "no audits recorded (fit without debug_audit)\n"
    lines = []
    for ti, audit in enumerate(model.audits):
        for rec in audit:
            chosen = rec["chosen"]
            head = "tree %d node %d n=%d candidates=%d" % (
                ti, rec["node"], rec["n"], len(rec["features"]))
            if chosen < 0:
                lines.append(head + " -> leaf (no valid split)")
                continue
            lines.append(
                "%s -> feature %d thr %.6g gain %.6g" % (
                    head, rec["features"][chosen],
                    rec["thresholds"][chosen], rec["gains"][chosen])
            )
    return "\n".join(lines) + "\n"


def save_forest(path, model):
    """Versioned blob: per-tree arrays concatenated with offset tables."""
    arrays = {}
    node_counts = []
    leaf_counts = []
    for field_name in ("feature", "threshold", "left", "right", "leaf_id"):
        arrays[field_name] = np.concatenate(
            [getattr(t, field_name) for t in model.trees])
    arrays["hist"] = np.concatenate([t.hist for t in model.trees], axis=0)
    for t in model.trees:
        node_counts.append(t.feature.size)
        leaf_counts.append(t.hist.shape[0])
    arrays["node_counts"] = np.array(node_counts, dtype=np.int64)
    arrays["leaf_counts"] = np.array(leaf_counts, dtype=np.int64)
    write_blob(path, arrays, meta={
        "kind": "forest",
        "version": 1,
        "n_classes": model.n_classes,
        "n_features": model.n_features,
        "config": {
            "n_trees": model.config.n_trees,
            "max_features_fraction": model.config.max_features_fraction,
            "seed": list(_seed_tuple(model.config.seed)),
            "min_samples_split": model.config.min_samples_split,
        },
    })


def load_forest(path):
    arrays, meta = read_blob(path)
    if meta.get("kind") != "forest" or meta.get("version") != 1:
        raise ValueError("%s: not a version-1 forest blob" % (path,))
    cfg_meta = meta["config"]
    config = ForestConfig(
        n_trees=int(cfg_meta["n_trees"]),
        max_features_fraction=float(cfg_meta["max_features_fraction"]),
        seed=tuple(cfg_meta["seed"]),
        min_samples_split=int(cfg_meta["min_samples_split"]),
    )
    trees = []
    npos = 0
    lpos = 0
    for nc, lc in zip(arrays["node_counts"], arrays["leaf_counts"]):
        nc = int(nc)
        lc = int(lc)
        trees.append(_Tree(
            feature=arrays["feature"][npos:npos + nc],
            threshold=arrays["threshold"][npos:npos + nc],
            left=arrays["left"][npos:npos + nc],
            right=arrays["right"][npos:npos + nc],
            leaf_id=arrays["leaf_id"][npos:npos + nc],
            hist=arrays["hist"][lpos:lpos + lc],
        ))
        npos += nc
        lpos += lc
    return ForestModel(trees=trees, n_classes=int(meta["n_classes"]),
                       n_features=int(meta["n_features"]), config=config)
