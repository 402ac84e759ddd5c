"""The six Hydra+Quant combination strategies.

Strategy names: ``fc_ridge`` and ``fc_et`` (one meta-learner on the
concatenated feature matrices), ``qfeat_hlogit_ridge`` and
``qfeat_hlogit_et`` (quant features joined with out-of-fold hydra
logits), ``dual_oof_et`` (forest on both bases' out-of-fold logits), and
``cawpe`` (accuracy-weighted probability averaging).

Every fit-side code path runs inside :func:`fit_phase`; test harnesses
can wrap the test split in a tripwire that raises when its values are
read while a fit phase is active, proving no test leakage.

RNG streams: the hydra kernel seed is its own config field (default 42);
all forest seeds derive from the ensemble seed via fixed stream tags, and
fold-level fits use (seed, stream, fold) so concurrent fold execution
cannot change results.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from .classifiers import (
    ForestConfig,
    forest_fit,
    forest_predict_proba,
    ridge_decision,
    ridge_fit,
    scores_to_probs,
)
from .data import stratified_kfold
from .features import FeatureMatrix, hstack_features
from .hydra import HydraConfig, hydra_fit_transform, hydra_transform
from .quant import QuantConfig, quant_transform
from .timing import PhaseTimer

__all__ = [
    "STRATEGIES",
    "EnsembleConfig",
    "LogitMatrix",
    "BaseFits",
    "HydraRidgePipeline",
    "QuantForestPipeline",
    "fit_phase",
    "in_fit_phase",
    "oof_probs",
    "oof_logits",
    "prepare_bases",
    "cawpe_combine",
    "ensemble_gain",
    "run_strategy",
    "StrategyResult",
]

STRATEGIES = (
    "fc_ridge",
    "fc_et",
    "qfeat_hlogit_ridge",
    "qfeat_hlogit_et",
    "dual_oof_et",
    "cawpe",
)

# Stream tags separating the forest RNG consumers under one ensemble seed.
_STREAM_BASE_Q = 0
_STREAM_FOLD_Q = 1
_STREAM_META = 2

_FIT_DEPTH = 0


@contextmanager
def fit_phase():
    """Marks fit-side work; nesting is allowed and counted."""
    global _FIT_DEPTH
    _FIT_DEPTH += 1
    try:
        yield
    finally:
        _FIT_DEPTH -= 1


def in_fit_phase():
    return _FIT_DEPTH > 0


@dataclass(frozen=True)
class EnsembleConfig:
    strategy: str = "fc_et"
    folds: int = 5
    seed: int = 42
    cawpe_alpha: float = 4.0
    n_trees: int = 200
    hydra: HydraConfig = HydraConfig()
    quant: QuantConfig = QuantConfig()

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(
                "unknown strategy %r; choose from %s"
                % (self.strategy, ", ".join(STRATEGIES))
            )
        if self.folds < 2:
            raise ValueError("folds must be >= 2")
        if self.cawpe_alpha <= 0:
            raise ValueError("cawpe_alpha must be > 0")


@dataclass
class LogitMatrix:
    values: np.ndarray  # [n, c]
    source: str         # hydra_ridge | quant_forest
    oof: bool

    def as_features(self):
        cols = [{"source": "logits", "base": self.source, "class": j,
                 "oof": self.oof}
                for j in range(self.values.shape[1])]
        return FeatureMatrix(values=self.values, columns=cols)


def _accuracy(pred, y):
    return float(np.mean(pred == y))


class HydraRidgePipeline:
    """Hydra features into ridge; probabilities via softmax of scores."""

    def __init__(self, hydra_config=None):
        self.hydra_config = hydra_config or HydraConfig()
        self.transform = None
        self.model = None

    def fit(self, train):
        with fit_phase():
            self.transform, feats = hydra_fit_transform(self.hydra_config,
                                                        train)
            self.model = ridge_fit(feats, train.y)
        return self

    def decision(self, d):
        feats = hydra_transform(self.transform, d)
        return ridge_decision(self.model, feats)

    def predict_proba(self, d):
        return scores_to_probs(self.decision(d))


class QuantForestPipeline:
    """Quant features into an extra-trees forest; leaf-frequency probs."""

    def __init__(self, quant_config=None, forest_config=None):
        self.quant_config = quant_config or QuantConfig()
        self.forest_config = forest_config or ForestConfig()
        self.model = None

    def fit(self, train):
        with fit_phase():
            feats = quant_transform(self.quant_config, train)
            self.model = forest_fit(feats, train.y, self.forest_config)
        return self

    def predict_proba(self, d):
        feats = quant_transform(self.quant_config, d)
        return forest_predict_proba(self.model, feats)


def oof_probs(factory, train, folds, seed):
    """Out-of-fold probability matrix [n, c] in original row order.

    ``factory(fold_index)`` must return an unfitted pipeline exposing
    ``fit(dataset)`` and ``predict_proba(dataset)``. For each fold the
    pipeline is fitted on the other folds only (transforms included) and
    predicts the held-out rows, so no row is predicted by a model that
    saw it.
    """
    fa = stratified_kfold(train.y, folds, seed)
    out = np.full((train.n_instances, train.n_classes), np.nan)
    with fit_phase():
        for k in range(fa.k):
            pipe = factory(k)
            pipe.fit(train.take(fa.train_indices(k)))
            held = fa.heldout_indices(k)
            out[held] = pipe.predict_proba(train.take(held))
    if np.isnan(out).any():
        raise AssertionError("out-of-fold assembly left unfilled rows")
    return out


def _hydra_factory(config):
    def factory(_fold):
        return HydraRidgePipeline(hydra_config=config.hydra)
    return factory


def _quant_factory(config):
    def factory(fold):
        fc = ForestConfig(n_trees=config.n_trees,
                          seed=(config.seed, _STREAM_FOLD_Q, fold))
        return QuantForestPipeline(quant_config=config.quant,
                                   forest_config=fc)
    return factory


def oof_logits(base, train, folds, seed, config=None):
    """Spec-named wrapper producing a LogitMatrix for a standard base."""
    config = config or EnsembleConfig(seed=seed, folds=folds)
    if base == "hydra_ridge":
        values = oof_probs(_hydra_factory(config), train, folds, seed)
    elif base == "quant_forest":
        values = oof_probs(_quant_factory(config), train, folds, seed)
    else:
        raise ValueError("unknown base %r" % (base,))
    return LogitMatrix(values=values, source=base, oof=True)


@dataclass
class BaseFits:
    """Both base pipelines fitted on the full training split."""

    hydra_pipe: HydraRidgePipeline
    quant_pipe: QuantForestPipeline
    h_train: FeatureMatrix
    q_train: FeatureMatrix
    h_test: FeatureMatrix
    q_test: FeatureMatrix
    h_test_probs: np.ndarray
    q_test_probs: np.ndarray
    h_pred: np.ndarray
    q_pred: np.ndarray
    acc_h: float
    acc_q: float
    acc_h_train: float
    acc_q_train: float
    n_classes: int


def prepare_bases(train, test, config=None, timer=None):
    """Fit both bases on full train, evaluate both splits once.

    Train-side work runs in the fit phase; test features and predictions
    are produced strictly afterwards. Train-set self-accuracies are kept
    for the CAWPE proxy.
    """
    config = config or EnsembleConfig()
    timer = timer or PhaseTimer()

    with fit_phase():
        with timer.phase("transform_fit"):
            t_h, h_train = hydra_fit_transform(config.hydra, train)
        with timer.phase("classifier_fit"):
            h_model = ridge_fit(h_train, train.y)
        with timer.phase("transform_apply"):
            q_train = quant_transform(config.quant, train)
        with timer.phase("classifier_fit"):
            q_forest_cfg = ForestConfig(n_trees=config.n_trees,
                                        seed=(config.seed, _STREAM_BASE_Q))
            q_model = forest_fit(q_train, train.y, q_forest_cfg)
            h_train_pred = np.argmax(ridge_decision(h_model, h_train), axis=1)
            q_train_pred = np.argmax(forest_predict_proba(q_model, q_train),
                                     axis=1)

    hydra_pipe = HydraRidgePipeline(hydra_config=config.hydra)
    hydra_pipe.transform = t_h
    hydra_pipe.model = h_model
    quant_pipe = QuantForestPipeline(quant_config=config.quant,
                                     forest_config=q_forest_cfg)
    quant_pipe.model = q_model

    with timer.phase("predict"):
        h_test = hydra_transform(t_h, test)
        h_test_probs = scores_to_probs(ridge_decision(h_model, h_test))
        q_test = quant_transform(config.quant, test)
        q_test_probs = forest_predict_proba(q_model, q_test)
        h_pred = np.argmax(h_test_probs, axis=1)
        q_pred = np.argmax(q_test_probs, axis=1)

    return BaseFits(
        hydra_pipe=hydra_pipe,
        quant_pipe=quant_pipe,
        h_train=h_train,
        q_train=q_train,
        h_test=h_test,
        q_test=q_test,
        h_test_probs=h_test_probs,
        q_test_probs=q_test_probs,
        h_pred=h_pred,
        q_pred=q_pred,
        acc_h=_accuracy(h_pred, test.y),
        acc_q=_accuracy(q_pred, test.y),
        acc_h_train=_accuracy(h_train_pred, train.y),
        acc_q_train=_accuracy(q_train_pred, train.y),
        n_classes=train.n_classes,
    )


def cawpe_combine(p_h, p_q, acc_h, acc_q, alpha):
    """Accuracy-weighted probability average.

    rows = (acc_h^a * p_h + acc_q^a * p_q) / (acc_h^a + acc_q^a).
    """
    p_h = np.asarray(p_h, dtype=np.float64)
    p_q = np.asarray(p_q, dtype=np.float64)
    if p_h.shape != p_q.shape:
        raise ValueError("probability matrices must have equal shapes")
    for name, p in (("p_h", p_h), ("p_q", p_q)):
        if np.any(p < -1e-12) or np.any(np.abs(p.sum(axis=1) - 1.0) > 1e-6):
            raise ValueError("%s rows are not stochastic" % (name,))
    if not (0.0 <= acc_h <= 1.0 and 0.0 <= acc_q <= 1.0):
        raise ValueError("accuracies must lie in [0, 1]")
    w_h = acc_h ** alpha
    w_q = acc_q ** alpha
    if w_h + w_q == 0.0:
        raise ValueError("both accuracies are 0: weights undefined")
    return (w_h * p_h + w_q * p_q) / (w_h + w_q)


def ensemble_gain(acc_ensemble, acc_h, acc_q):
    """Ensemble accuracy minus the better base accuracy."""
    return acc_ensemble - max(acc_h, acc_q)


@dataclass
class StrategyResult:
    strategy: str
    probs: np.ndarray
    pred: np.ndarray
    accuracy: float
    acc_h: float
    acc_q: float
    gain: float
    extras: dict = field(default_factory=dict)


def _meta_forest_config(config):
    return ForestConfig(n_trees=config.n_trees,
                        seed=(config.seed, _STREAM_META))


def _fit_meta(kind, feats, y, config, timer):
    with fit_phase(), timer.phase("classifier_fit"):
        if kind == "ridge":
            model = ridge_fit(feats, y)
            extras = {"meta_alpha": model.alpha_selected}
        else:
            model = forest_fit(feats, y, _meta_forest_config(config))
            extras = {}
    return model, extras


def _meta_probs(kind, model, feats):
    if kind == "ridge":
        return scores_to_probs(ridge_decision(model, feats))
    return forest_predict_proba(model, feats)


def _finish(strategy, probs, test, bases, extras):
    pred = np.argmax(probs, axis=1)
    acc = _accuracy(pred, test.y)
    return StrategyResult(
        strategy=strategy,
        probs=probs,
        pred=pred,
        accuracy=acc,
        acc_h=bases.acc_h,
        acc_q=bases.acc_q,
        gain=ensemble_gain(acc, bases.acc_h, bases.acc_q),
        extras=extras,
    )


def _run_fc(kind, train, test, config, bases, timer):
    train_feats = hstack_features(bases.h_train, bases.q_train)
    model, extras = _fit_meta(kind, train_feats, train.y, config, timer)
    with timer.phase("predict"):
        test_feats = hstack_features(bases.h_test, bases.q_test)
        probs = _meta_probs(kind, model, test_feats)
    extras["meta_width"] = train_feats.n_columns
    return probs, extras


def _run_qfeat_hlogit(kind, train, test, config, bases, timer):
    with timer.phase("oof_generation"):
        lh = oof_logits("hydra_ridge", train, config.folds, config.seed,
                        config=config)
    train_feats = hstack_features(bases.q_train, lh.as_features())
    model, extras = _fit_meta(kind, train_feats, train.y, config, timer)
    with timer.phase("predict"):
        test_logits = LogitMatrix(values=bases.h_test_probs,
                                  source="hydra_ridge", oof=False)
        test_feats = hstack_features(bases.q_test, test_logits.as_features())
        probs = _meta_probs(kind, model, test_feats)
    extras["meta_width"] = train_feats.n_columns
    return probs, extras


def _run_dual_oof(train, test, config, bases, timer):
    with timer.phase("oof_generation"):
        lh = oof_logits("hydra_ridge", train, config.folds, config.seed,
                        config=config)
        lq = oof_logits("quant_forest", train, config.folds, config.seed,
                        config=config)
    train_feats = hstack_features(lh.as_features(), lq.as_features())
    model, extras = _fit_meta("forest", train_feats, train.y, config, timer)
    with timer.phase("predict"):
        h_logits = LogitMatrix(values=bases.h_test_probs,
                               source="hydra_ridge", oof=False)
        q_logits = LogitMatrix(values=bases.q_test_probs,
                               source="quant_forest", oof=False)
        test_feats = hstack_features(h_logits.as_features(),
                                     q_logits.as_features())
        probs = _meta_probs("forest", model, test_feats)
    extras["meta_width"] = train_feats.n_columns
    return probs, extras


def _run_cawpe(train, test, config, bases, timer):
    with timer.phase("predict"):
        probs = cawpe_combine(bases.h_test_probs, bases.q_test_probs,
                              bases.acc_h_train, bases.acc_q_train,
                              config.cawpe_alpha)
    extras = {
        "proxy_acc_h": bases.acc_h_train,
        "proxy_acc_q": bases.acc_q_train,
        "weight_h": bases.acc_h_train ** config.cawpe_alpha,
        "weight_q": bases.acc_q_train ** config.cawpe_alpha,
        "alpha": config.cawpe_alpha,
    }
    return probs, extras


def run_strategy(name, train, test, config=None, bases=None, timer=None):
    """Run one strategy end to end; returns a StrategyResult.

    ``bases`` (full-train base fits) may be shared across strategies of
    one benchmark run; it is computed here when absent.
    """
    if config is None:
        config = EnsembleConfig(strategy=name)
    elif config.strategy != name:
        raise ValueError("config.strategy %r does not match %r"
                         % (config.strategy, name))
    timer = timer or PhaseTimer()
    if bases is None:
        bases = prepare_bases(train, test, config, timer)

    if name in ("fc_ridge", "fc_et"):
        kind = "ridge" if name == "fc_ridge" else "forest"
        probs, extras = _run_fc(kind, train, test, config, bases, timer)
    elif name in ("qfeat_hlogit_ridge", "qfeat_hlogit_et"):
        kind = "ridge" if name == "qfeat_hlogit_ridge" else "forest"
        probs, extras = _run_qfeat_hlogit(kind, train, test, config, bases,
                                          timer)
    elif name == "dual_oof_et":
        probs, extras = _run_dual_oof(train, test, config, bases, timer)
    elif name == "cawpe":
        probs, extras = _run_cawpe(train, test, config, bases, timer)
    else:
        raise ValueError("unknown strategy %r" % (name,))
    return _finish(name, probs, test, bases, extras)
