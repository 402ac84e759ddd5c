"""Convolutional count transform: schedule, kernels, counting, persistence.

The counting oracle below recomputes responses with plain Python loops
(zero padding, strict-greater winner, ties to the lowest kernel index) so
the vectorized and compiled paths are checked against a second route.
"""

import numpy as np
import pytest

from tsblend.data import Dataset
from tsblend.features import FeatureMatrix
from tsblend.hydra import (
    HydraConfig, compute_dilations, hydra_fit, hydra_fit_transform,
    hydra_transform, load_transform, save_transform, _raw_features,
)


def _ds(x, seed=0):
    n = x.shape[0]
    y = np.arange(n) % 2
    np.random.default_rng(seed).shuffle(y)
    return Dataset.from_arrays(x, y, name="h", split_tag="train")


def _rand_ds(n=8, ch=1, length=40, seed=0):
    return _ds(np.random.default_rng(seed).standard_normal((n, ch, length)))


# ----------------------------------------------------------------- schedule

def test_dilation_schedule_known_values():
    assert compute_dilations(9, 9) == [1]
    assert compute_dilations(128, 9) == [1, 2, 4, 8]
    assert compute_dilations(600, 9) == [1, 2, 4, 8, 16, 32, 64]


def test_dilation_schedule_integer_exact_boundary():
    # reach = 32 admits dilation 4 (4*8 = 32 <= 32); reach = 31 does not.
    assert compute_dilations(33, 9) == [1, 2, 4]
    assert compute_dilations(32, 9) == [1, 2]


def test_dilation_schedule_matches_log_formula():
    import math
    for length in range(9, 700, 13):
        dils = compute_dilations(length, 9)
        dmax = int(math.floor(math.log2((length - 1) / 8))) if length > 9 else 0
        # float log2 can sit exactly on a power; trust the integer route but
        # allow the float formula one step of slack before comparing.
        while 2 ** (dmax + 1) * 8 <= length - 1:
            dmax += 1
        while dmax > 0 and 2 ** dmax * 8 > length - 1:
            dmax -= 1
        assert dils == [2 ** e for e in range(dmax + 1)], length


def test_dilation_schedule_too_short():
    with pytest.raises(ValueError, match="series length 8 shorter than kernel length 9"):
        compute_dilations(8, 9)


def test_config_validation():
    with pytest.raises(ValueError, match="g must be >= 1"):
        HydraConfig(g=0)
    with pytest.raises(ValueError, match="competition needs contenders"):
        HydraConfig(k=1)
    with pytest.raises(ValueError, match="odd and >= 3"):
        HydraConfig(kernel_length=8)
    with pytest.raises(ValueError, match="odd and >= 3"):
        HydraConfig(kernel_length=1)


# ------------------------------------------------------------------- kernels

def test_fitted_state_geometry_univariate():
    t = hydra_fit(HydraConfig(), _rand_ds(n=4, ch=1, length=128))
    assert t.dilations == (1, 2, 4, 8)
    assert t.weights.shape == (4, 64, 8, 1, 9)
    assert t.channel_selection.shape == (4, 64, 1)
    assert not t.weights.flags.writeable
    assert not t.feature_mean.flags.writeable


def test_kernels_mean_centered_per_slab():
    t = hydra_fit(HydraConfig(g=8), _rand_ds(n=4, ch=2, length=64))
    slab_means = t.weights.mean(axis=(3, 4))
    np.testing.assert_allclose(slab_means, 0.0, atol=1e-12)


def test_channel_subsets_valid():
    ds = _rand_ds(n=6, ch=5, length=40)
    t = hydra_fit(HydraConfig(g=8), ds)
    assert t.channel_selection.shape[-1] == 3  # min(5, 3)
    for di in range(t.channel_selection.shape[0]):
        for gq in range(8):
            row = t.channel_selection[di, gq]
            assert np.unique(row).size == row.size
            assert row.min() >= 0 and row.max() < 5
    t2 = hydra_fit(HydraConfig(g=8), _rand_ds(n=6, ch=2, length=40))
    assert t2.channel_selection.shape[-1] == 2


def test_fit_deterministic_and_seed_sensitive():
    ds = _rand_ds()
    a = hydra_fit(HydraConfig(g=4), ds)
    b = hydra_fit(HydraConfig(g=4), ds)
    c = hydra_fit(HydraConfig(g=4, seed=7), ds)
    np.testing.assert_array_equal(a.weights, b.weights)
    np.testing.assert_array_equal(a.channel_selection, b.channel_selection)
    assert not np.array_equal(a.weights, c.weights)


# ------------------------------------------------------------------ counting

def _count_oracle(x, weights, sel, dilation):
    """Loop reimplementation of one dilation's competition counts."""
    n, _, length = x.shape
    g, k, ch_used, klen = weights.shape
    half = klen // 2
    hard = np.zeros((n, g, k), dtype=np.int64)
    soft = np.zeros((n, g, k))
    for i in range(n):
        for gq in range(g):
            for t in range(length):
                resp = np.zeros(k)
                for kk in range(k):
                    acc = 0.0
                    for j in range(klen):
                        tt = t + (j - half) * dilation
                        if 0 <= tt < length:
                            for c in range(ch_used):
                                acc += weights[gq, kk, c, j] * x[i, sel[gq, c], tt]
                    resp[kk] = acc
                best, best_mag = 0, abs(resp[0])
                for kk in range(1, k):
                    if abs(resp[kk]) > best_mag:
                        best, best_mag = kk, abs(resp[kk])
                hard[i, gq, best] += 1
                soft[i, gq, best] += best_mag
    return hard, soft


def test_counts_match_loop_oracle():
    ds = _rand_ds(n=3, ch=4, length=21, seed=5)
    cfg = HydraConfig(g=2, k=3, kernel_length=5, seed=1)
    t = hydra_fit(cfg, ds)
    x = ds.x.astype(np.float64)
    raw = _raw_features(np.asarray(t.weights), np.asarray(t.channel_selection),
                        list(t.dilations), x)
    n, g, k = 3, 2, 3
    raw = raw.reshape(n, len(t.dilations), g, k, 2)
    for di, dil in enumerate(t.dilations):
        hard, soft = _count_oracle(x, t.weights[di], t.channel_selection[di], dil)
        np.testing.assert_array_equal(raw[:, di, :, :, 0], hard)
        np.testing.assert_allclose(raw[:, di, :, :, 1], soft, atol=1e-9)


def test_hard_counts_conserve_series_length():
    ds = _rand_ds(n=6, ch=2, length=40, seed=3)
    t = hydra_fit(HydraConfig(g=8), ds)
    raw = _raw_features(np.asarray(t.weights), np.asarray(t.channel_selection),
                        list(t.dilations), ds.x.astype(np.float64))
    r = raw.reshape(6, len(t.dilations), 8, 8, 2)
    np.testing.assert_array_equal(r[..., 0].sum(axis=3), 40)


def test_all_zero_input_ties_to_first_kernel():
    train = _rand_ds(n=4, ch=1, length=32, seed=2)
    t = hydra_fit(HydraConfig(g=4), train)
    zeros = np.zeros((2, 1, 32))
    raw = _raw_features(np.asarray(t.weights), np.asarray(t.channel_selection),
                        list(t.dilations), zeros)
    r = raw.reshape(2, len(t.dilations), 4, 8, 2)
    np.testing.assert_array_equal(r[..., 0, 0], 32)      # kernel 0 takes all
    np.testing.assert_array_equal(r[..., 1:, 0], 0)      # others nothing
    np.testing.assert_array_equal(r[..., 1], 0.0)        # soft mass all zero


def test_features_invariant_to_global_sign_flip():
    """|response| competition cannot see x -> -x; bitwise identical output."""
    ds = _rand_ds(n=5, ch=1, length=40, seed=8)
    t, fm = hydra_fit_transform(HydraConfig(g=4), ds)
    flipped = Dataset.from_arrays(-ds.x, ds.y, name="h", split_tag="test")
    fm2 = hydra_transform(t, flipped)
    np.testing.assert_array_equal(fm.values, fm2.values)


# ------------------------------------------------------------- normalization

def test_normalization_uses_train_statistics():
    cfg = HydraConfig(g=4)
    train = _rand_ds(n=10, ch=1, length=40, seed=0)
    t, fm_train = hydra_fit_transform(cfg, train)
    raw = _raw_features(np.asarray(t.weights), np.asarray(t.channel_selection),
                        list(t.dilations), train.x.astype(np.float64))
    np.testing.assert_allclose(fm_train.values,
                               (raw - t.feature_mean) / t.feature_scale,
                               atol=0, rtol=0)
    np.testing.assert_allclose(fm_train.values.mean(axis=0), 0.0, atol=1e-9)
    assert fm_train.values.std(axis=0).max() <= 1.0 + 1e-9

    test = _rand_ds(n=7, ch=1, length=40, seed=99)
    raw_te = _raw_features(np.asarray(t.weights), np.asarray(t.channel_selection),
                           list(t.dilations), test.x.astype(np.float64))
    np.testing.assert_array_equal(hydra_transform(t, test).values,
                                  (raw_te - t.feature_mean) / t.feature_scale)


def test_fit_transform_equals_fit_then_transform():
    ds = _rand_ds(n=6, ch=2, length=33, seed=4)
    cfg = HydraConfig(g=4, seed=3)
    t1, fm1 = hydra_fit_transform(cfg, ds)
    fm2 = hydra_transform(hydra_fit(cfg, ds), ds)
    np.testing.assert_array_equal(fm1.values, fm2.values)
    assert fm1.columns == fm2.columns


def test_transform_rows_independent_of_batch_composition():
    """Chunked evaluation must not couple instances."""
    ds = _rand_ds(n=70, ch=1, length=40, seed=6)
    t, fm = hydra_fit_transform(HydraConfig(g=2, k=4), ds)
    for i in (0, 31, 32, 69):
        solo = hydra_transform(t, ds.take([i, (i + 1) % 70]))
        np.testing.assert_array_equal(fm.values[i], solo.values[0])


def test_dimension_mismatch_errors():
    t = hydra_fit(HydraConfig(g=2), _rand_ds(n=4, ch=2, length=40))
    with pytest.raises(ValueError, match="do not match fit-time dimensions"):
        hydra_transform(t, _rand_ds(n=4, ch=1, length=40))
    with pytest.raises(ValueError, match="do not match fit-time dimensions"):
        hydra_transform(t, _rand_ds(n=4, ch=2, length=41))


# ------------------------------------------------------------------- columns

def test_feature_width_and_column_order():
    ds = _rand_ds(n=2, ch=1, length=128, seed=1)
    t, fm = hydra_fit_transform(HydraConfig(), ds)
    assert fm.n_columns == 4 * 64 * 8 * 2 == 4096
    c0, c1, c2 = fm.columns[0], fm.columns[1], fm.columns[2]
    assert c0 == {"source": "hydra", "dilation": 1, "group": 0, "kernel": 0,
                  "kind": "hard"}
    assert c1["kind"] == "soft" and c1["kernel"] == 0
    assert c2 == {"source": "hydra", "dilation": 1, "group": 0, "kernel": 1,
                  "kind": "hard"}
    # dilation-major ordering
    dil_seq = [c["dilation"] for c in fm.columns]
    assert dil_seq == sorted(dil_seq)
    assert fm.columns[-1]["dilation"] == 8


# --------------------------------------------------------------- persistence

def test_save_load_round_trip(tmp_path):
    ds = _rand_ds(n=6, ch=2, length=40, seed=12)
    cfg = HydraConfig(g=4, seed=5)
    t, fm = hydra_fit_transform(cfg, ds)
    p = tmp_path / "t.tsb"
    save_transform(p, t)
    back = load_transform(p)
    assert back.config == cfg
    assert back.dilations == t.dilations
    assert back.n_channels == 2 and back.series_length == 40
    np.testing.assert_array_equal(back.weights, t.weights)
    test = _rand_ds(n=4, ch=2, length=40, seed=77)
    np.testing.assert_array_equal(hydra_transform(back, test).values,
                                  hydra_transform(t, test).values)


def test_load_rejects_foreign_blobs(tmp_path):
    from tsblend.serialize import read_blob, write_blob
    p = tmp_path / "bad.tsb"
    write_blob(p, {"a": np.zeros(3)}, meta={"kind": "something_else"})
    with pytest.raises(ValueError, match="not a hydra transform blob"):
        load_transform(p)
    ds = _rand_ds(n=4, ch=1, length=20, seed=0)
    good = tmp_path / "good.tsb"
    save_transform(good, hydra_fit(HydraConfig(g=2), ds))
    arrays, meta = read_blob(good)
    meta["version"] = 99
    write_blob(p, arrays, meta=meta)
    with pytest.raises(ValueError, match="unsupported transform version"):
        load_transform(p)
