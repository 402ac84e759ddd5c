"""Learner families used across the package: ridge and extra-trees."""

from .forest import (
    ForestConfig,
    ForestModel,
    dump_audits,
    forest_fit,
    forest_predict_proba,
    load_forest,
    save_forest,
)
from .ridge import (
    DEFAULT_ALPHA_GRID,
    RidgeModel,
    ridge_decision,
    ridge_fit,
    scores_to_probs,
)

__all__ = [
    "DEFAULT_ALPHA_GRID",
    "RidgeModel",
    "ridge_fit",
    "ridge_decision",
    "scores_to_probs",
    "ForestConfig",
    "ForestModel",
    "forest_fit",
    "forest_predict_proba",
    "dump_audits",
    "save_forest",
    "load_forest",
]
