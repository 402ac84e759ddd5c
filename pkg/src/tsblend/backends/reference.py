"""Pure numpy implementations of the two hot kernels.

This module is the semantic reference: the compiled backend in ``_core``
must produce identical outputs for identical inputs. Both kernels are
deliberately written so their floating point accumulation order matches
the compiled loops (tap-major, channel-minor for convolution responses;
left-to-right gain expression for splits). Keep the two in sync.
"""

from __future__ import annotations

import numpy as np

__all__ = ["hydra_counts", "split_scan"]


def hydra_counts(x, weights, sel, dilation):
    """Competing-kernel count features for one dilation.

    Parameters
    ----------
    x : float64 [n_instances, n_channels, length]
        Input series.
    weights : float64 [n_groups, kernels_per_group, channels_used, kernel_length]
        Kernel weights. ``weights[g, k, c, :]`` applies to channel
        ``sel[g, c]``.
    sel : int64 [n_groups, channels_used]
        Channel subset per group.
    dilation : int
        Spacing between kernel taps.

    Returns
    -------
    hard : int64 [n_instances, n_groups, kernels_per_group]
        Number of time points where each kernel had the largest absolute
        response within its group. Ties go to the lowest kernel index.
    soft : float64 [n_instances, n_groups, kernels_per_group]
        Sum of winning absolute responses per kernel.

    The response at time point t is sum_j w[j] * x[t + (j - half) * d]
    with zero padding outside the series, so every t in [0, length) has a
    well defined winner and hard counts sum to length per (instance, group).
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    sel = np.ascontiguousarray(sel, dtype=np.int64)
    n, _, length = x.shape
    g, k, ch_used, klen = weights.shape
    half = klen // 2
    pad = half * dilation

    xpad = np.zeros((n, x.shape[1], length + 2 * pad), dtype=np.float64)
    xpad[:, :, pad:pad + length] = x
    xg = xpad[:, sel, :]  # [n, g, ch_used, padded_length]

    resp = np.zeros((n, g, k, length), dtype=np.float64)
    # Tap-major, channel-minor accumulation. The compiled backend walks the
    # same order so responses, and therefore winners, agree bit for bit.
    for j in range(klen):
        off = j * dilation
        xs = xg[:, :, :, off:off + length]
        for c in range(ch_used):
            resp += weights[None, :, :, c, j, None] * xs[:, :, c, None, :]

    mag = np.abs(resp)
    winner = np.argmax(mag, axis=2)  # first max: lowest kernel index on ties
    best_mag = np.max(mag, axis=2)

    hard = np.zeros((n, g, k), dtype=np.int64)
    for kk in range(k):
        hard[:, :, kk] = (winner == kk).sum(axis=2)

    # Soft counts must accumulate winning magnitudes in time order because
    # the compiled loop adds them one time step at a time. A plain sum over
    # the time axis reduces pairwise and can differ in the last ulp, so walk
    # time explicitly. Adding 0.0 for losing kernels leaves bits unchanged.
    soft = np.zeros((n, g, k), dtype=np.float64)
    kidx = np.arange(k)
    for t in range(length):
        oh = winner[:, :, t, None] == kidx
        soft += np.where(oh, best_mag[:, :, t, None], 0.0)
    return hard, soft


def _entropy_rows(counts):
    """Entropy in nats of each row of a nonnegative count matrix."""
    n = counts.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = counts / n
        plogp = np.where(counts > 0.0, p * np.log(p), 0.0)
    return -plogp.sum(axis=1)


def split_scan(x, y, idx, feats, u, n_classes):
    """Evaluate one random threshold per candidate feature at a tree node.

    Parameters
    ----------
    x : float64 [n_samples, n_features]
        Full training matrix.
    y : int64 [n_samples]
        Labels in [0, n_classes).
    idx : int64 [n_node]
        Rows of ``x`` that reached the node.
    feats : int64 [m]
        Candidate feature indices.
    u : float64 [m]
        Uniform draws in [0, 1), one per candidate.
    n_classes : int

    Returns
    -------
    best : int
        Index into ``feats`` of the winning candidate, or -1 when no
        candidate has spread (node is constant on every candidate).
    thresholds : float64 [m]
        ``fmin + u * (fmax - fmin)`` per candidate, nudged below ``fmax``
        when rounding lands on it, NaN for spreadless candidates.
    gains : float64 [m]
        Information gain in nats, -1.0 for spreadless candidates.
    """
    sub = x[np.ix_(idx, feats)]
    n_node = sub.shape[0]
    fmin = sub.min(axis=0)
    fmax = sub.max(axis=0)
    valid = fmax > fmin

    thr = fmin + u * (fmax - fmin)
    # u near 1 can round the threshold up onto fmax, which would leave the
    # right child empty under the x <= thr convention; nudge it back down.
    hi = thr >= fmax
    if hi.any():
        thr[hi] = np.nextafter(fmax[hi], fmin[hi])
    thr[~valid] = np.nan

    labels = y[idx]
    onehot = np.zeros((n_node, n_classes), dtype=np.float64)
    onehot[np.arange(n_node), labels] = 1.0
    parent = onehot.sum(axis=0)
    h_parent = _entropy_rows(parent[None, :])[0]

    left = sub <= thr[None, :]
    left_counts = left.T.astype(np.float64) @ onehot  # [m, n_classes]
    right_counts = parent[None, :] - left_counts
    n_left = left_counts.sum(axis=1)
    n_right = float(n_node) - n_left

    h_left = _entropy_rows(left_counts)
    h_right = _entropy_rows(right_counts)
    with np.errstate(invalid="ignore"):
        gains = h_parent - (n_left / n_node) * h_left - (n_right / n_node) * h_right
    # Invalid candidates sit at -1.0, strictly below any achievable gain
    # (entropy gains can round to a tiny negative but never near -1), so a
    # valid candidate always wins the argmax when one exists.
    gains[~valid] = -1.0
    best = int(np.argmax(gains)) if valid.any() else -1
    return best, thr, gains
