"""Time-series classification transforms, ensembles, and analysis.

Two transform families (competing-kernel counts and interval quantiles),
two learner families (ridge, extra-trees), six combination strategies,
and the complementarity/oracle metrics that explain when combining pays.
"""

from .backends import BACKEND_NAME, HAVE_COMPILED
from .complementarity import (
    ComplementarityReport,
    analyze,
    canonical_correlations,
    error_vectors,
    median_max_cross_correlation,
    oracle_utilization,
    prediction_metrics,
)
from .classifiers import (
    ForestConfig,
    ForestModel,
    RidgeModel,
    forest_fit,
    forest_predict_proba,
    ridge_decision,
    ridge_fit,
    scores_to_probs,
)
from .data import (
    Dataset,
    load_dataset,
    load_split_pair,
    remap_labels,
    save_dataset,
    stratified_kfold,
    subsample_indices,
)
from .ensembles import (
    STRATEGIES,
    BaseFits,
    EnsembleConfig,
    HydraRidgePipeline,
    LogitMatrix,
    QuantForestPipeline,
    cawpe_combine,
    ensemble_gain,
    oof_logits,
    oof_probs,
    prepare_bases,
    run_strategy,
)
from .features import FeatureMatrix, hstack_features, load_features, \
    save_features
from .hydra import (
    HydraConfig,
    HydraTransform,
    compute_dilations,
    hydra_fit,
    hydra_fit_transform,
    hydra_transform,
)
from .quant import (
    IntervalSet,
    QuantConfig,
    dyadic_intervals,
    interval_quantiles,
    quant_transform,
    quantile_count,
    representations,
)

__version__ = "0.1.0"
