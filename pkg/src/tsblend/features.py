"""Feature matrices with per-column provenance.

Every transform and logit producer returns a :class:`FeatureMatrix` whose
``columns`` list carries one small dict per column (always including a
``source`` key: ``hydra``, ``quant``, or ``logits``). Provenance survives
concatenation so meta-learner inputs remain auditable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .serialize import read_blob, write_blob

__all__ = [
    "FeatureMatrix",
    "hstack_features",
    "save_features",
    "load_features",
]


@dataclass
class FeatureMatrix:
    """Dense n x d real matrix plus per-column provenance dicts."""

    values: np.ndarray
    columns: list = field(default_factory=list)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError("feature values must be 2-D")
        if self.columns and len(self.columns) != self.values.shape[1]:
            raise ValueError(
                "column metadata length %d does not match width %d"
                % (len(self.columns), self.values.shape[1])
            )

    @property
    def n_rows(self):
        return self.values.shape[0]

    @property
    def n_columns(self):
        return self.values.shape[1]

    def sources(self):
        """Distinct source tags present, in first-appearance order."""
        seen = []
        for col in self.columns:
            src = col.get("source")
            if src not in seen:
                seen.append(src)
        return seen


def hstack_features(*mats):
    """Concatenate feature matrices column-wise, keeping provenance."""
    if not mats:
        raise ValueError("nothing to concatenate")
    n = mats[0].n_rows
    for m in mats[1:]:
        if m.n_rows != n:
            raise ValueError("row count mismatch in feature concatenation")
    values = np.concatenate([m.values for m in mats], axis=1)
    columns = []
    for m in mats:
        columns.extend(m.columns)
    return FeatureMatrix(values=values, columns=columns)


def save_features(path, fm, meta=None):
    """Write a feature matrix to a TSB1 blob with its provenance header."""
    header = dict(meta or {})
    header["kind"] = "feature_matrix"
    header["columns"] = fm.columns
    write_blob(path, {"values": fm.values}, meta=header)


def load_features(path):
    """Read a feature matrix blob; returns (FeatureMatrix, meta)."""
    arrays, meta = read_blob(path)
    if "values" not in arrays:
        raise ValueError("%s: blob holds no 'values' array" % (path,))
    columns = meta.get("columns", [])
    fm = FeatureMatrix(values=arrays["values"], columns=list(columns))
    rest = {k: v for k, v in meta.items() if k not in ("columns", "kind")}
    return fm, rest
