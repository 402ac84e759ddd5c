"""Competing-convolutional-kernel transform.

Random dilated kernels are organized into groups; within a group the
kernels compete at every time point and the winner (largest absolute
response, lowest index on ties) collects a hard count and the winning
magnitude as a soft count. Features are the per-kernel counts over all
dilations and groups, normalized by statistics fitted on training data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backends
from .data import Dataset
from .features import FeatureMatrix
from .serialize import read_blob, write_blob

__all__ = [
    "HydraConfig",
    "HydraTransform",
    "compute_dilations",
    "hydra_fit",
    "hydra_fit_transform",
    "hydra_transform",
    "save_transform",
    "load_transform",
]

_CHUNK = 32  # instances per backend call; results are chunk-size invariant


@dataclass(frozen=True)
class HydraConfig:
    g: int = 64
    k: int = 8
    kernel_length: int = 9
    seed: int = 42

    def __post_init__(self):
        if self.g < 1:
            raise ValueError("g must be >= 1")
        if self.k < 2:
            raise ValueError("k must be >= 2: competition needs contenders")
        if self.kernel_length < 3 or self.kernel_length % 2 == 0:
            raise ValueError("kernel_length must be odd and >= 3")


@dataclass(frozen=True)
class HydraTransform:
    """Immutable fitted state: weights, channel subsets, train stats."""

    config: HydraConfig
    dilations: tuple
    weights: np.ndarray            # [n_dil, g, k, ch_used, klen]
    channel_selection: np.ndarray  # [n_dil, g, ch_used]
    n_channels: int
    series_length: int
    feature_mean: np.ndarray
    feature_scale: np.ndarray


def compute_dilations(series_length, kernel_length):
    """Exponential dilation schedule 2^0 .. 2^dmax.

    dmax = floor(log2((series_length - 1) / (kernel_length - 1))),
    evaluated in exact integer arithmetic: the largest e such that
    2^e * (kernel_length - 1) <= series_length - 1.
    """
    if series_length < kernel_length:
        raise ValueError(
            "series length %d shorter than kernel length %d"
            % (series_length, kernel_length)
        )
    span = kernel_length - 1
    reach = series_length - 1
    dilations = [1]
    while dilations[-1] * 2 * span <= reach:
        dilations.append(dilations[-1] * 2)
    return dilations


def _raw_features(weights, sel, dilations, x):
    """Unnormalized count features, [n, n_dil * g * k * 2].

    Column order: dilation-major, then group, then kernel, with hard and
    soft interleaved innermost.
    """
    n = x.shape[0]
    blocks = []
    for start in range(0, n, _CHUNK):
        xc = np.ascontiguousarray(x[start:start + _CHUNK], dtype=np.float64)
        per_dil = []
        for di, dil in enumerate(dilations):
            hard, soft = backends.hydra_counts(xc, weights[di], sel[di], dil)
            pair = np.stack([hard.astype(np.float64), soft], axis=3)
            per_dil.append(pair.reshape(xc.shape[0], -1))
        blocks.append(np.concatenate(per_dil, axis=1))
    return np.concatenate(blocks, axis=0)


def hydra_fit(config, train):
    """Draw kernels, fix channel subsets, fit per-feature normalization.

    All randomness comes from one generator seeded with ``config.seed``,
    consumed in a fixed order (per dilation: weights, then per-group
    channel subsets), so two fits with the same seed are bit-identical.
    Kernel weights are standard normal, then mean-centered per kernel
    (mean over the kernel's channels-by-taps slab).
    """
    t, _ = hydra_fit_transform(config, train)
    return t


def hydra_fit_transform(config, train):
    """Fit and return (transform, normalized train features).

    Same result as ``hydra_fit`` followed by ``hydra_transform`` on the
    training set, but the counting pass over the training data runs once.
    """
    if not isinstance(train, Dataset):
        raise TypeError("train must be a Dataset")
    dilations = compute_dilations(train.series_length, config.kernel_length)
    ch_used = min(train.n_channels, 3)
    rng = np.random.default_rng(config.seed)

    n_dil = len(dilations)
    weights = np.empty(
        (n_dil, config.g, config.k, ch_used, config.kernel_length),
        dtype=np.float64,
    )
    sel = np.empty((n_dil, config.g, ch_used), dtype=np.int64)
    for di in range(n_dil):
        w = rng.standard_normal(weights.shape[1:])
        w -= w.mean(axis=(2, 3), keepdims=True)
        weights[di] = w
        for gq in range(config.g):
            sel[di, gq] = rng.choice(train.n_channels, size=ch_used,
                                     replace=False)

    raw = _raw_features(weights, sel, dilations,
                        train.x.astype(np.float64))
    mean = raw.mean(axis=0)
    scale = raw.std(axis=0) + 1e-8

    weights.flags.writeable = False
    sel.flags.writeable = False
    mean.flags.writeable = False
    scale.flags.writeable = False
    t = HydraTransform(
        config=config,
        dilations=tuple(dilations),
        weights=weights,
        channel_selection=sel,
        n_channels=train.n_channels,
        series_length=train.series_length,
        feature_mean=mean,
        feature_scale=scale,
    )
    values = (raw - mean) / scale
    return t, FeatureMatrix(values=values, columns=_column_meta(t))


def _column_meta(t):
    cols = []
    for dil in t.dilations:
        for gq in range(t.config.g):
            for kk in range(t.config.k):
                for kind in ("hard", "soft"):
                    cols.append({
                        "source": "hydra",
                        "dilation": int(dil),
                        "group": gq,
                        "kernel": kk,
                        "kind": kind,
                    })
    return cols


def hydra_transform(t, d):
    """Normalized count features for dataset ``d``."""
    if d.n_channels != t.n_channels or d.series_length != t.series_length:
        raise ValueError(
            "dataset dimensions (%d channels, length %d) do not match "
            "fit-time dimensions (%d channels, length %d)"
            % (d.n_channels, d.series_length, t.n_channels, t.series_length)
        )
    raw = _raw_features(t.weights, t.channel_selection, t.dilations,
                        d.x.astype(np.float64))
    values = (raw - t.feature_mean) / t.feature_scale
    return FeatureMatrix(values=values, columns=_column_meta(t))


def save_transform(path, t):
    """Serialize a fitted transform to a versioned TSB1 blob."""
    meta = {
        "kind": "hydra_transform",
        "version": 1,
        "config": {
            "g": t.config.g,
            "k": t.config.k,
            "kernel_length": t.config.kernel_length,
            "seed": t.config.seed,
        },
        "dilations": [int(v) for v in t.dilations],
        "n_channels": t.n_channels,
        "series_length": t.series_length,
    }
    write_blob(path, {
        "weights": t.weights,
        "channel_selection": t.channel_selection,
        "feature_mean": t.feature_mean,
        "feature_scale": t.feature_scale,
    }, meta=meta)


def load_transform(path):
    arrays, meta = read_blob(path)
    if meta.get("kind") != "hydra_transform":
        raise ValueError("%s: not a hydra transform blob" % (path,))
    if meta.get("version") != 1:
        raise ValueError(
            "%s: unsupported transform version %r" % (path, meta.get("version"))
        )
    cfg = HydraConfig(**meta["config"])
    return HydraTransform(
        config=cfg,
        dilations=tuple(meta["dilations"]),
        weights=arrays["weights"],
        channel_selection=arrays["channel_selection"].astype(np.int64),
        n_channels=int(meta["n_channels"]),
        series_length=int(meta["series_length"]),
        feature_mean=arrays["feature_mean"],
        feature_scale=arrays["feature_scale"],
    )
