"""Linear one-vs-rest classifier: oracles for the solver and the selector.

Two independent routes back the fast paths: a dense normal-equations
solve checks coefficients at a fixed alpha, and explicit per-row refits
check the leave-one-out selection errors.
"""

import numpy as np
import pytest

import tsblend.classifiers.ridge as ridge_mod
from tsblend.classifiers.ridge import (
    DEFAULT_ALPHA_GRID, ridge_decision, ridge_fit, scores_to_probs,
)


def _blobs(n=200, d=2, c=2, seed=0, gap=6.0):
    rng = np.random.default_rng(seed)
    y = np.arange(n) % c
    rng.shuffle(y)
    x = rng.standard_normal((n, d))
    for cls in range(1, c):
        x[y == cls, cls % d] += gap  # one bump dimension per class
    return x, y.astype(np.int64)


def _standardized(x):
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    scale = np.where(std == 0.0, 1.0, std)
    return (x - mean) / scale


def _targets(y, c):
    t = -np.ones((y.size, c))
    t[np.arange(y.size), y] = 1.0
    return t


# ------------------------------------------------------------------ fitting

def test_separable_blobs_high_accuracy():
    x, y = _blobs()
    model = ridge_fit(x, y)
    pred = np.argmax(ridge_decision(model, x), axis=1)
    assert np.mean(pred == y) >= 0.99
    assert model.alpha_selected in DEFAULT_ALPHA_GRID
    assert model.alpha_errors.shape == (10,)


def test_fit_errors():
    x, y = _blobs(n=20)
    with pytest.raises(ValueError, match="single class: nothing to separate"):
        ridge_fit(x, np.zeros(20, dtype=np.int64))
    with pytest.raises(ValueError, match="need at least 2 samples"):
        ridge_fit(x[:1], y[:1])
    with pytest.raises(ValueError, match="one label per row"):
        ridge_fit(x, y[:-1])
    with pytest.raises(ValueError, match="alpha grid must be positive reals"):
        ridge_fit(x, y, alpha_grid=[1.0, -2.0])
    with pytest.raises(ValueError, match="alpha grid must be positive reals"):
        ridge_fit(x, y, alpha_grid=[])


def test_binary_scores_antisymmetric():
    x, y = _blobs(n=60, d=5, seed=3)
    model = ridge_fit(x, y)
    s = ridge_decision(model, x + 0.3)
    np.testing.assert_array_equal(s[:, 1], -s[:, 0])


def test_constant_columns_get_zero_weight():
    x, y = _blobs(n=80, d=3, seed=1)
    xa = np.hstack([x, np.full((80, 1), 7.5)])
    model = ridge_fit(xa, y)
    assert np.abs(model.coef[:, 3]).max() < 1e-10
    assert model.feature_scale[3] == 1.0
    # scores unchanged by the dead column
    base = ridge_fit(x, y)
    np.testing.assert_allclose(ridge_decision(model, xa),
                               ridge_decision(base, x), atol=1e-8)


def test_all_constant_features_fall_back_to_intercepts():
    x = np.full((30, 4), 2.0)
    y = (np.arange(30) % 2).astype(np.int64)
    model = ridge_fit(x, y)
    scores = ridge_decision(model, x)
    np.testing.assert_allclose(scores, np.broadcast_to(model.intercept, scores.shape),
                               atol=1e-12)
    np.testing.assert_allclose(model.intercept, [0.0, 0.0], atol=1e-12)


def test_decision_width_mismatch():
    x, y = _blobs(n=30, d=4)
    model = ridge_fit(x, y)
    with pytest.raises(ValueError, match="feature width 3 does not match fit width 4"):
        ridge_decision(model, x[:, :3])


# ------------------------------------------------------------------- oracles

def test_coefficients_match_normal_equations_oracle():
    rng = np.random.default_rng(4)
    x = rng.standard_normal((40, 6))
    y = rng.integers(0, 3, 40).astype(np.int64)
    alpha = 2.5
    model = ridge_fit(x, y, alpha_grid=[alpha])
    assert model.alpha_selected == alpha

    xs = _standardized(x)
    t = _targets(y, 3)
    yc = t - t.mean(axis=0)
    beta = np.linalg.solve(xs.T @ xs + alpha * np.eye(6), xs.T @ yc)
    np.testing.assert_allclose(model.coef, beta.T, rtol=1e-8, atol=1e-10)

    xt = rng.standard_normal((9, 6))
    want = _standardized_apply(x, xt) @ beta + t.mean(axis=0)
    np.testing.assert_allclose(ridge_decision(model, xt), want,
                               rtol=1e-8, atol=1e-10)


def _standardized_apply(train_x, new_x):
    mean = train_x.mean(axis=0)
    std = train_x.std(axis=0)
    scale = np.where(std == 0.0, 1.0, std)
    return (new_x - mean) / scale


def test_loo_selection_errors_match_explicit_refits():
    rng = np.random.default_rng(11)
    x = rng.standard_normal((14, 4))
    y = rng.integers(0, 3, 14).astype(np.int64)
    grid = np.array([0.05, 1.0, 30.0])
    model = ridge_fit(x, y, alpha_grid=grid)

    xs = _standardized(x)
    t = _targets(y, 3)
    z = np.hstack([np.ones((14, 1)), xs])
    want = []
    for alpha in grid:
        pen = np.diag(np.r_[0.0, np.full(4, alpha)])
        tot = 0.0
        for i in range(14):
            keep = np.arange(14) != i
            zi = z[keep]
            b = np.linalg.solve(zi.T @ zi + pen, zi.T @ t[keep])
            tot += float(((t[i] - z[i] @ b) ** 2).sum())
        want.append(tot)
    np.testing.assert_allclose(model.alpha_errors, want, rtol=1e-7)
    assert model.alpha_selected == grid[int(np.argmin(want))]


def test_duplicated_features_keep_predictions():
    x, y = _blobs(n=120, d=4, c=3, seed=6, gap=2.5)
    xd = np.hstack([x, x])
    xt, yt = _blobs(n=60, d=4, c=3, seed=7, gap=2.5)
    a = ridge_fit(x, y)
    b = ridge_fit(xd, y)
    np.testing.assert_array_equal(
        np.argmax(ridge_decision(a, xt), axis=1),
        np.argmax(ridge_decision(b, np.hstack([xt, xt])), axis=1))
    # and the duplicated fit still matches its own dense oracle exactly
    alpha = 1.0
    bd = ridge_fit(xd, y, alpha_grid=[alpha])
    xs = _standardized(xd)
    t = _targets(y, 3)
    yc = t - t.mean(axis=0)
    beta = np.linalg.solve(xs.T @ xs + alpha * np.eye(8), xs.T @ yc)
    np.testing.assert_allclose(bd.coef, beta.T, rtol=1e-7, atol=1e-9)


def test_tied_errors_select_lowest_alpha():
    x, y = _blobs(n=40, d=3, seed=2)
    model = ridge_fit(x, y, alpha_grid=[5.0, 5.0, 5.0])
    assert model.alpha_selected == 5.0
    assert np.all(model.alpha_errors == model.alpha_errors[0])


def test_larger_alpha_shrinks_coefficients():
    x, y = _blobs(n=100, d=6, c=3, seed=9)
    norms = [np.linalg.norm(ridge_fit(x, y, alpha_grid=[a]).coef)
             for a in (0.1, 10.0, 1000.0)]
    assert norms[0] > norms[1] > norms[2]


def test_cv_fallback_path():
    x, y = _blobs(n=120, d=5, c=2, seed=5)
    orig = ridge_mod._LOO_MAX
    try:
        ridge_mod._LOO_MAX = 50  # force the k-fold selector
        a = ridge_fit(x, y)
        b = ridge_fit(x, y)
    finally:
        ridge_mod._LOO_MAX = orig
    assert a.alpha_selected in DEFAULT_ALPHA_GRID
    np.testing.assert_array_equal(a.alpha_errors, b.alpha_errors)
    pred = np.argmax(ridge_decision(a, x), axis=1)
    assert np.mean(pred == y) >= 0.95


# ------------------------------------------------------------- probabilities

def test_probs_known_values():
    p = scores_to_probs(np.array([[0.0, 0.0]]))
    np.testing.assert_allclose(p, [[0.5, 0.5]], atol=1e-12)


def test_probs_extreme_scores_no_overflow():
    p = scores_to_probs(np.array([[1000.0, 0.0], [-1000.0, 0.0]]))
    assert np.isfinite(p).all()
    np.testing.assert_allclose(p[0], [1.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(p[1], [0.0, 1.0], atol=1e-12)


def test_probs_preserve_ranking_and_normalize():
    rng = np.random.default_rng(0)
    s = rng.standard_normal((50, 4)) * 10
    p = scores_to_probs(s)
    np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-9)
    assert (p > 0).all()
    np.testing.assert_array_equal(np.argsort(s, axis=1), np.argsort(p, axis=1))


def test_probs_reject_nonfinite():
    with pytest.raises(ValueError, match="scores must be finite"):
        scores_to_probs(np.array([[np.nan, 0.0]]))
