"""Feature-level and prediction-level complementarity metrics.

Feature metrics (cross-correlation, canonical correlations) run on a
capped, seeded subsample of the test split; prediction metrics (error
correlation, disagreement, oracle accuracy) always use the full test
split. Undefined quantities are explicit flags with reasons, never NaN.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import subsample_indices
from .ensembles import prepare_bases
from .timing import PhaseTimer

__all__ = [
    "CrossCorrResult",
    "PredictionMetrics",
    "ComplementarityReport",
    "median_max_cross_correlation",
    "canonical_correlations",
    "error_vectors",
    "prediction_metrics",
    "oracle_utilization",
    "analyze",
]

_TILE = 512
_CCA_EPS = 1e-6
_UTILIZATION_FLOOR = 1e-12


def _matrix(x):
    return np.asarray(getattr(x, "values", x), dtype=np.float64)


def _standardize(x):
    """Center and scale columns; constant columns become all-zero.

    Returns (standardized, n_constant). Uses population std, so for
    non-constant columns the cross products / n are exact Pearson r.
    """
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    constant = std == 0.0
    scale = np.where(constant, 1.0, std)
    xs = (x - mean) / scale
    xs[:, constant] = 0.0
    return xs, int(constant.sum())


@dataclass
class CrossCorrResult:
    value: float
    n_constant_h: int
    n_constant_q: int


def median_max_cross_correlation(h, q):
    """Median over hydra columns of the max |Pearson r| vs quant columns.

    Constant columns on either side contribute correlation 0; their
    counts are reported. The full correlation block is walked in fixed
    column tiles so large feature pairs stay in memory bounds.
    """
    h = _matrix(h)
    q = _matrix(q)
    if h.shape[0] != q.shape[0]:
        raise ValueError("row counts differ")
    n = h.shape[0]
    if n < 3:
        raise ValueError("need at least 3 rows for correlation")
    hs, const_h = _standardize(h)
    qs, const_q = _standardize(q)

    best = np.zeros(h.shape[1])
    for start in range(0, q.shape[1], _TILE):
        tile = qs[:, start:start + _TILE]
        block = np.abs(hs.T @ tile) / n
        if block.size:
            np.maximum(best, block.max(axis=1), out=best)
    np.minimum(best, 1.0, out=best)
    return CrossCorrResult(
        value=float(np.median(best)),
        n_constant_h=const_h,
        n_constant_q=const_q,
    )


def canonical_correlations(h, q, max_components=5):
    """Ridge-regularized canonical correlations, non-increasing in [0,1].

    Computed from thin SVDs of the standardized matrices: with
    Hs = U_h S_h V_h' the whitened cross covariance shares its singular
    values with diag(a_h) (U_h' U_q) diag(a_q), a = s / sqrt(s^2 + n*eps),
    which avoids forming d x d covariance matrices.
    """
    h = _matrix(h)
    q = _matrix(q)
    if h.shape[0] != q.shape[0]:
        raise ValueError("row counts differ")
    n = h.shape[0]
    if n < 4:
        raise ValueError("need at least 4 rows")
    hs, const_h = _standardize(h)
    qs, const_q = _standardize(q)
    if const_h == h.shape[1] or const_q == q.shape[1]:
        raise ValueError("rank-zero input: all columns constant")

    uh, sh, _ = np.linalg.svd(hs, full_matrices=False)
    uq, sq, _ = np.linalg.svd(qs, full_matrices=False)
    ah = sh / np.sqrt(sh * sh + n * _CCA_EPS)
    aq = sq / np.sqrt(sq * sq + n * _CCA_EPS)
    m = (ah[:, None] * (uh.T @ uq)) * aq[None, :]
    sigma = np.linalg.svd(m, compute_uv=False)

    r = min(int(max_components), h.shape[1], q.shape[1], n // 2)
    return np.clip(sigma[:r], 0.0, 1.0)


def error_vectors(pred, truth):
    """1 where prediction differs from truth, else 0."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise ValueError("length mismatch")
    return (pred != truth).astype(np.int64)


@dataclass
class PredictionMetrics:
    acc_h: float
    acc_q: float
    disagreement: float
    acc_oracle: float
    oracle_gain: float
    both_wrong_count: int
    error_corr: object  # float or None
    error_corr_reason: object  # str or None


def prediction_metrics(pred_h, pred_q, truth):
    """Error correlation, disagreement, and oracle accuracy (full set)."""
    pred_h = np.asarray(pred_h)
    pred_q = np.asarray(pred_q)
    truth = np.asarray(truth)
    if not (pred_h.shape == pred_q.shape == truth.shape):
        raise ValueError("length mismatch")
    n = truth.size
    if n < 2:
        raise ValueError("need at least 2 predictions")

    e_h = error_vectors(pred_h, truth)
    e_q = error_vectors(pred_q, truth)
    acc_h = 1.0 - float(e_h.mean())
    acc_q = 1.0 - float(e_q.mean())
    disagreement = float(np.mean(pred_h != pred_q))
    both_wrong = int(np.sum((e_h == 1) & (e_q == 1)))
    acc_oracle = 1.0 - both_wrong / n
    oracle_gain = acc_oracle - max(acc_h, acc_q)

    v_h = e_h.std()
    v_q = e_q.std()
    if v_h == 0.0 or v_q == 0.0:
        corr = None
        reason = "zero-variance error vector"
    else:
        dh = e_h - e_h.mean()
        dq = e_q - e_q.mean()
        corr = float(np.mean(dh * dq) / (v_h * v_q))
        reason = None
    return PredictionMetrics(
        acc_h=acc_h,
        acc_q=acc_q,
        disagreement=disagreement,
        acc_oracle=acc_oracle,
        oracle_gain=oracle_gain,
        both_wrong_count=both_wrong,
        error_corr=corr,
        error_corr_reason=reason,
    )


def oracle_utilization(ensemble_gain, oracle_gain):
    """Percent of oracle headroom the ensemble captured; None when the
    oracle gain is (numerically) zero. Negative values are meaningful:
    the ensemble fell below the better base."""
    if oracle_gain < 0:
        raise ValueError("oracle_gain must be >= 0")
    if oracle_gain < _UTILIZATION_FLOOR:
        return None
    return 100.0 * ensemble_gain / oracle_gain


@dataclass
class ComplementarityReport:
    dataset: str
    median_max_cross_corr: float
    n_constant_hydra: int
    n_constant_quant: int
    canonical_corrs: list
    acc_h: float
    acc_q: float
    disagreement: float
    acc_oracle: float
    oracle_gain: float
    both_wrong_count: int
    error_corr: object
    error_corr_reason: object
    subsample_seed: int
    subsample_n: int
    notes: list = field(default_factory=list)

    def to_json_dict(self):
        """JSON-safe dict: undefined values are nulls with reasons."""
        return {
            "dataset": self.dataset,
            "median_max_cross_corr": self.median_max_cross_corr,
            "n_constant_hydra": self.n_constant_hydra,
            "n_constant_quant": self.n_constant_quant,
            "canonical_corrs": [float(v) for v in self.canonical_corrs],
            "acc_h": self.acc_h,
            "acc_q": self.acc_q,
            "disagreement": self.disagreement,
            "acc_oracle": self.acc_oracle,
            "oracle_gain": self.oracle_gain,
            "both_wrong_count": self.both_wrong_count,
            "error_corr": self.error_corr,
            "error_corr_reason": self.error_corr_reason,
            "subsample_seed": self.subsample_seed,
            "subsample_n": self.subsample_n,
            "notes": list(self.notes),
        }


def analyze(train, test, config=None, cap=5000, subsample_seed=42,
            timer=None):
    """Full complementarity report for one train/test pair.

    Both bases are fitted on the full training split; feature metrics use
    a seeded test subsample of at most ``cap`` rows, prediction metrics
    the full test split.
    """
    timer = timer or PhaseTimer()
    bases = prepare_bases(train, test, config, timer)
    sub = subsample_indices(test.n_instances, cap, subsample_seed)

    h_sub = bases.h_test.values[sub]
    q_sub = bases.q_test.values[sub]
    cross = median_max_cross_correlation(h_sub, q_sub)
    ccs = canonical_correlations(h_sub, q_sub, max_components=5)
    pm = prediction_metrics(bases.h_pred, bases.q_pred, test.y)

    return ComplementarityReport(
        dataset=test.name,
        median_max_cross_corr=cross.value,
        n_constant_hydra=cross.n_constant_h,
        n_constant_quant=cross.n_constant_q,
        canonical_corrs=[float(v) for v in ccs],
        acc_h=pm.acc_h,
        acc_q=pm.acc_q,
        disagreement=pm.disagreement,
        acc_oracle=pm.acc_oracle,
        oracle_gain=pm.oracle_gain,
        both_wrong_count=pm.both_wrong_count,
        error_corr=pm.error_corr,
        error_corr_reason=pm.error_corr_reason,
        subsample_seed=subsample_seed,
        subsample_n=int(sub.size),
    )
