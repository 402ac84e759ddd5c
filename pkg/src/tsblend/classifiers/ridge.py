"""L2-regularized one-vs-rest linear classifier with automatic alpha.

Targets are +-1 per class, columns are standardized, and alpha is picked
from a log grid by efficient leave-one-out error (thin SVD identity) for
ordinary sizes, falling back to 5-fold CV above ``_LOO_MAX`` rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data import stratified_kfold

__all__ = [
    "DEFAULT_ALPHA_GRID",
    "RidgeModel",
    "ridge_fit",
    "ridge_decision",
    "scores_to_probs",
]

DEFAULT_ALPHA_GRID = np.logspace(-3, 3, 10)
_LOO_MAX = 10_000


@dataclass
class RidgeModel:
    coef: np.ndarray        # [c, d], standardized feature space
    intercept: np.ndarray   # [c]
    alpha_selected: float
    feature_mean: np.ndarray
    feature_scale: np.ndarray
    n_classes: int
    alpha_errors: np.ndarray  # selection error per grid alpha, for audit


def _values(x):
    v = getattr(x, "values", x)
    return np.asarray(v, dtype=np.float64)


def _standardize_stats(x):
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    scale = np.where(std == 0.0, 1.0, std)
    return mean, scale


def _targets(y, n_classes):
    t = np.full((y.size, n_classes), -1.0)
    t[np.arange(y.size), y] = 1.0
    return t


def _solve(vt, s, uty, alpha):
    """Coefficients [d, c] from a thin SVD at one alpha."""
    shrink = s / (s * s + alpha)
    return vt.T @ (shrink[:, None] * uty)


def _loo_errors(xs, yc, alpha_grid):
    """Total squared leave-one-out residual for each alpha.

    Uses the hat-matrix identity e_loo = e / (1 - h); h includes the 1/n
    term for the unpenalized intercept (the per-class target mean).
    """
    n = xs.shape[0]
    u, s, _ = np.linalg.svd(xs, full_matrices=False)
    uty = u.T @ yc
    u2 = u * u
    errors = np.empty(len(alpha_grid))
    for ai, alpha in enumerate(alpha_grid):
        d = (s * s) / (s * s + alpha)
        fitted = u @ (d[:, None] * uty)
        h = u2 @ d + 1.0 / n
        denom = np.maximum(1.0 - h, 1e-12)
        resid = (yc - fitted) / denom[:, None]
        errors[ai] = float(np.sum(resid * resid))
    return errors


def _cv_errors(xs, yc, y, alpha_grid):
    """5-fold CV squared validation error per alpha, for large n."""
    folds = stratified_kfold(y, 5, seed=0)
    errors = np.zeros(len(alpha_grid))
    for k in range(folds.k):
        tr = folds.train_indices(k)
        va = folds.heldout_indices(k)
        u, s, vt = np.linalg.svd(xs[tr], full_matrices=False)
        uty = u.T @ yc[tr]
        for ai, alpha in enumerate(alpha_grid):
            beta = _solve(vt, s, uty, alpha)
            resid = yc[va] - xs[va] @ beta
            errors[ai] += float(np.sum(resid * resid))
    return errors


def ridge_fit(x, y, alpha_grid=None):
    """Fit one-vs-rest ridge with alpha chosen from the grid.

    Ties in selection error go to the smallest alpha. Constant columns
    get scale 1 and therefore zero weight under +-1 targets.
    """
    x = _values(x)
    y = np.asarray(y, dtype=np.int64)
    if x.ndim != 2 or x.shape[0] != y.size:
        raise ValueError("x must be [n, d] with one label per row")
    if x.shape[0] < 2:
        raise ValueError("need at least 2 samples")
    n_classes = int(y.max()) + 1 if y.size else 0
    if np.unique(y).size < 2:
        raise ValueError("single class: nothing to separate")

    grid = DEFAULT_ALPHA_GRID if alpha_grid is None else np.asarray(
        alpha_grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size == 0 or np.any(grid <= 0):
        raise ValueError("alpha grid must be positive reals")
    grid = np.sort(grid)

    mean, scale = _standardize_stats(x)
    xs = (x - mean) / scale
    targets = _targets(y, n_classes)
    ybar = targets.mean(axis=0)
    yc = targets - ybar

    if x.shape[0] <= _LOO_MAX:
        errors = _loo_errors(xs, yc, grid)
    else:
        errors = _cv_errors(xs, yc, y, grid)
    best = int(np.argmin(errors))  # first minimum: lowest alpha on ties
    alpha = float(grid[best])

    u, s, vt = np.linalg.svd(xs, full_matrices=False)
    beta = _solve(vt, s, u.T @ yc, alpha)
    if not np.all(np.isfinite(beta)):
        raise FloatingPointError("non-finite ridge coefficients")
    return RidgeModel(
        coef=beta.T,
        intercept=ybar,
        alpha_selected=alpha,
        feature_mean=mean,
        feature_scale=scale,
        n_classes=n_classes,
        alpha_errors=errors,
    )


def ridge_decision(model, x):
    """Raw one-vs-rest decision scores [n, c]; row argmax is the class."""
    x = _values(x)
    if x.shape[1] != model.coef.shape[1]:
        raise ValueError(
            "feature width %d does not match fit width %d"
            % (x.shape[1], model.coef.shape[1])
        )
    xs = (x - model.feature_mean) / model.feature_scale
    return xs @ model.coef.T + model.intercept


def scores_to_probs(scores):
    """Row-wise softmax with max subtraction; rows sum to 1."""
    scores = np.asarray(scores, dtype=np.float64)
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)
