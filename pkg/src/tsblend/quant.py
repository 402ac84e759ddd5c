"""Dyadic-interval quantile transform over four series representations.

For every channel the series is viewed four ways: as given, as a smoothed
first difference, as a second difference, and as an unnormalized rfft
magnitude spectrum. Each view is carved into dyadic intervals (plus
half-shifted variants below the top level) and evenly spaced quantiles
are extracted per interval, with the interval mean subtracted at odd
positions. The transform is stateless and has no randomness.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .features import FeatureMatrix

__all__ = [
    "QuantConfig",
    "IntervalSet",
    "dyadic_intervals",
    "quantile_count",
    "interval_quantiles",
    "representations",
    "quant_transform",
]


@dataclass(frozen=True)
class QuantConfig:
    depth: int = 6
    divisor: int = 4
    smoothing_window: int = 5

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        if self.divisor < 1:
            raise ValueError("divisor must be >= 1")
        if self.smoothing_window < 1:
            raise ValueError("smoothing_window must be >= 1")


@dataclass(frozen=True)
class IntervalSet:
    length: int
    intervals: tuple  # of (start, end) half-open pairs


def dyadic_intervals(length, depth):
    """Dyadic partitions of [0, length) for levels 0..depth-1.

    Level l contributes the 2^l equal partitions (any remainder spread
    one element at a time over the leading intervals) and, for l >= 1,
    the same intervals shifted right by half an interval width
    (length // 2^(l+1)); shifted intervals running past the end are
    discarded and exact duplicates are removed, first occurrence kept.
    """
    if length < 1:
        raise ValueError("length must be >= 1")
    out = []
    seen = set()
    for level in range(depth):
        n_int = 2 ** level
        if n_int > length:
            break
        base = length // n_int
        rem = length % n_int
        bounds = [0]
        for i in range(n_int):
            bounds.append(bounds[-1] + base + (1 if i < rem else 0))
        ivs = list(zip(bounds[:-1], bounds[1:]))
        if level >= 1:
            shift = length // (2 ** (level + 1))
            ivs += [(s + shift, e + shift) for s, e in ivs
                    if e + shift <= length]
        for iv in ivs:
            if iv not in seen:
                seen.add(iv)
                out.append(iv)
    return IntervalSet(length=length, intervals=tuple(out))


def quantile_count(m, v):
    """Number of quantiles extracted from an interval of length m."""
    if m < 1 or v < 1:
        raise ValueError("m and v must be >= 1")
    return 1 + (m - 1) // v


def interval_quantiles(values, k):
    """k evenly spaced quantiles with the mean subtracted at odd slots.

    k = 1 returns the median. Otherwise quantile i sits at probability
    i/(k-1) with linear interpolation between order statistics, and the
    interval mean is subtracted from entries at odd 0-based positions.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("values must be non-empty")
    if k < 1:
        raise ValueError("k must be >= 1")
    if k == 1:
        return np.array([np.quantile(values, 0.5)])
    probs = np.arange(k) / (k - 1)
    q = np.quantile(values, probs)
    q[1::2] -= values.mean()
    return q


def representations(series, smoothing_window):
    """The four per-series views; too-short views are omitted with a note.

    Returns (views, notes): ``views`` maps name -> vector in the fixed
    order original, diff_smooth, diff2, fft_mag; ``notes`` lists omitted
    views with the reason.
    """
    series = np.asarray(series, dtype=np.float64)
    if series.ndim != 1 or series.size < 2:
        raise ValueError("series must be 1-D with length >= 2")
    length = series.size
    w = smoothing_window

    views = {"original": series}
    notes = []

    diff = np.diff(series)
    if diff.size >= w:
        views["diff_smooth"] = _moving_average(diff[None, :], w)[0]
    else:
        notes.append("diff_smooth omitted: length %d < window %d"
                     % (diff.size, w))
    if length >= 3:
        views["diff2"] = np.diff(series, n=2)
    else:
        notes.append("diff2 omitted: length %d < 3" % (length,))
    views["fft_mag"] = np.abs(np.fft.rfft(series))
    return views, notes


def _moving_average(rows, window):
    """Valid-mode moving average along axis 1; output width - window + 1."""
    sw = np.lib.stride_tricks.sliding_window_view(rows, window, axis=1)
    return sw.mean(axis=2)


def _batch_views(x_channel, window):
    """Vectorized representations for a [n, length] block.

    Mirrors :func:`representations` row-wise; returns the same names in
    the same order, skipping views the length cannot support.
    """
    length = x_channel.shape[1]
    views = [("original", x_channel)]
    diff = np.diff(x_channel, axis=1)
    if diff.shape[1] >= window:
        views.append(("diff_smooth", _moving_average(diff, window)))
    if length >= 3:
        views.append(("diff2", np.diff(x_channel, n=2, axis=1)))
    views.append(("fft_mag", np.abs(np.fft.rfft(x_channel, axis=1))))
    return views


def quant_transform(config, d):
    """Quantile features for every instance; deterministic column layout.

    Column order: channel-major, then representation, then interval in
    enumeration order, then quantile index.
    """
    if d.series_length < 2:
        raise ValueError("series too short for quant representations")
    x = d.x.astype(np.float64)
    n = x.shape[0]

    blocks = []
    columns = []
    for c in range(d.n_channels):
        for name, mat in _batch_views(x[:, c, :], config.smoothing_window):
            iset = dyadic_intervals(mat.shape[1], config.depth)
            for (s, e) in iset.intervals:
                sub = mat[:, s:e]
                m = e - s
                k = quantile_count(m, config.divisor)
                if k == 1:
                    q = np.quantile(sub, 0.5, axis=1)[None, :]
                else:
                    probs = np.arange(k) / (k - 1)
                    q = np.quantile(sub, probs, axis=1)  # [k, n]
                    q[1::2, :] -= sub.mean(axis=1)[None, :]
                blocks.append(q.T)
                for qi in range(k):
                    columns.append({
                        "source": "quant",
                        "channel": c,
                        "representation": name,
                        "interval": [int(s), int(e)],
                        "quantile": qi,
                        "k": int(k),
                    })
    values = np.concatenate(blocks, axis=1) if blocks else np.zeros((n, 0))
    return FeatureMatrix(values=values, columns=columns)


def quant_column_count(series_length, n_channels, config):
    """Closed-form column count for a given input geometry."""
    total = 0
    lengths = [series_length]
    diff_len = series_length - 1
    if diff_len >= config.smoothing_window:
        lengths.append(diff_len - config.smoothing_window + 1)
    if series_length >= 3:
        lengths.append(series_length - 2)
    lengths.append(series_length // 2 + 1)
    for m_rep in lengths:
        iset = dyadic_intervals(m_rep, config.depth)
        for (s, e) in iset.intervals:
            total += quantile_count(e - s, config.divisor)
    return total * n_channels
