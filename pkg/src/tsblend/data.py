"""Dataset ingestion, validation, stratified splitting, deterministic subsampling.

Datasets are fixed-length multichannel series panels with integer class
labels. Labels are remapped to a contiguous ``{0..c-1}`` range at load time
and the mapping is kept on the dataset for report output.

Binary file format (little-endian):

    magic "TSD1" | u64 n_instances | u64 n_channels | u64 series_length
    | u64 n_labels_present | f32 data row-major [instance][channel][time]
    | i64 labels

CSV fallback (univariate only): one row per instance, label in the last
column, optional header row.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

import numpy as np

MAGIC = b"TSD1"
_HEADER_DTYPE = np.dtype("<u8")


@dataclass(frozen=True)
class Dataset:
    """Validated panel of labeled series.

    ``x`` has shape [n_instances, n_channels, series_length] (float32) and
    ``y`` holds contiguous labels in ``{0..n_classes-1}`` (int64).
    """

    x: np.ndarray
    y: np.ndarray
    name: str = "unnamed"
    split_tag: str = "train"
    n_classes: int = 0
    label_mapping: dict = field(default_factory=dict)

    @property
    def n_instances(self) -> int:
        return self.x.shape[0]

    @property
    def n_channels(self) -> int:
        return self.x.shape[1]

    @property
    def series_length(self) -> int:
        return self.x.shape[2]

    @staticmethod
    def from_arrays(x, y, name="unnamed", split_tag="train", n_classes=None,
                    label_mapping=None, require_all_classes=True) -> "Dataset":
        """Build and validate a dataset from raw arrays.

        ``n_classes=None`` infers the class count from the labels and then
        requires every class to be present (the train-split invariant).
        Derived subsets pass an explicit ``n_classes`` with
        ``require_all_classes=False``.
        """
        x = np.ascontiguousarray(x, dtype=np.float32)
        y = np.ascontiguousarray(y, dtype=np.int64)
        if x.ndim != 3:
            raise ValueError(f"x must be [n, channels, length], got shape {x.shape}")
        if y.ndim != 1 or y.shape[0] != x.shape[0]:
            raise ValueError("y must be 1-D with one label per instance")
        if x.shape[0] < 2:
            raise ValueError("dataset needs at least 2 instances")
        if x.shape[2] < 1:
            raise ValueError("series length must be >= 1")
        if not np.isfinite(x).all():
            bad = int(np.argwhere(~np.isfinite(x).all(axis=(1, 2)))[0, 0])
            raise ValueError(f"non-finite values at instance {bad}")
        if n_classes is None:
            n_classes = int(y.max()) + 1 if y.size else 0
        if n_classes < 2:
            raise ValueError("dataset must contain at least 2 classes")
        if y.min() < 0 or y.max() >= n_classes:
            raise ValueError(f"labels must lie in [0, {n_classes})")
        if require_all_classes:
            present = np.unique(y)
            if present.size != n_classes:
                missing = sorted(set(range(n_classes)) - set(present.tolist()))
                raise ValueError(f"classes {missing} absent from {split_tag} split")
        return Dataset(x=x, y=y, name=name, split_tag=split_tag,
                       n_classes=n_classes,
                       label_mapping=dict(label_mapping or {}))

    def take(self, indices) -> "Dataset":
        """Row subset sharing this dataset's class space and metadata."""
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset.from_arrays(
            self.x[idx], self.y[idx], name=self.name, split_tag=self.split_tag,
            n_classes=self.n_classes, label_mapping=self.label_mapping,
            require_all_classes=False)


def remap_labels(y_raw):
    """Map arbitrary integer labels to contiguous {0..c-1}.

    Returns (y, mapping) where mapping is {original: contiguous}.
    """
    y_raw = np.asarray(y_raw, dtype=np.int64)
    uniq = np.unique(y_raw)
    mapping = {int(orig): i for i, orig in enumerate(uniq)}
    y = np.searchsorted(uniq, y_raw).astype(np.int64)
    return y, mapping


def save_dataset(ds: Dataset, path) -> None:
    """Write a dataset in the binary format; round-trips bit-exactly."""
    with open(path, "wb") as f:
        f.write(MAGIC)
        header = np.array(
            [ds.n_instances, ds.n_channels, ds.series_length,
             len(np.unique(ds.y))], dtype=_HEADER_DTYPE)
        f.write(header.tobytes())
        f.write(np.ascontiguousarray(ds.x, dtype="<f4").tobytes())
        f.write(np.ascontiguousarray(ds.y, dtype="<i8").tobytes())


def _load_binary(path):
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != MAGIC:
            raise ValueError(f"{path}: malformed header (bad magic {magic!r})")
        raw = f.read(32)
        if len(raw) != 32:
            raise ValueError(f"{path}: malformed header (truncated)")
        header = np.frombuffer(raw, dtype=_HEADER_DTYPE)
        n, ch, length, _n_labels = (int(v) for v in header)
        want = n * ch * length
        raw = f.read(want * 4)
        data = np.frombuffer(raw[:len(raw) - len(raw) % 4], dtype="<f4")
        if data.size != want:
            raise ValueError(
                f"{path}: dimension mismatch (expected {want} values, got {data.size})")
        raw = f.read(n * 8)
        labels = np.frombuffer(raw[:len(raw) - len(raw) % 8], dtype="<i8")
        if labels.size != n:
            raise ValueError(f"{path}: dimension mismatch (expected {n} labels)")
        if f.read(1):
            raise ValueError(f"{path}: trailing bytes after payload")
    return data.reshape(n, ch, length).copy(), labels.copy()


def _load_csv(path):
    rows = []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        for i, row in enumerate(reader):
            row = [cell.strip() for cell in row if cell.strip() != ""]
            if not row:
                continue
            if i == 0:
                try:
                    [float(c) for c in row]
                except ValueError:
                    continue  # header row
            rows.append([float(c) for c in row])
    if not rows:
        raise ValueError(f"{path}: empty csv")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError(f"{path}: dimension mismatch (ragged rows)")
    arr = np.asarray(rows, dtype=np.float64)
    x = arr[:, :-1].astype(np.float32)[:, None, :]  # univariate
    labels = arr[:, -1]
    if not np.all(labels == np.round(labels)):
        raise ValueError(f"{path}: labels must be integers")
    return x, labels.astype(np.int64)


def load_dataset(path, layout="binary", name=None, split_tag="train") -> Dataset:
    """Load one split from disk, remapping labels to {0..c-1}."""
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    if layout == "binary":
        x, y_raw = _load_binary(path)
    elif layout == "csv":
        x, y_raw = _load_csv(path)
    else:
        raise ValueError(f"unknown layout {layout!r}")
    y, mapping = remap_labels(y_raw)
    return Dataset.from_arrays(
        x, y, name=name or os.path.basename(path), split_tag=split_tag,
        label_mapping=mapping)


def load_split_pair(directory, name=None):
    """Load a train/test pair from a directory.

    Expects ``train.tsd``+``test.tsd`` (binary) or ``train.csv``+``test.csv``.
    The label mapping is computed jointly so both splits share it; the train
    split must cover every class that appears in either split.
    """
    for layout, ext in (("binary", "tsd"), ("csv", "csv")):
        tr = os.path.join(directory, f"train.{ext}")
        te = os.path.join(directory, f"test.{ext}")
        if os.path.exists(tr) and os.path.exists(te):
            break
    else:
        raise FileNotFoundError(f"{directory}: no train/test pair found")
    loader = _load_binary if layout == "binary" else _load_csv
    x_tr, yr_tr = loader(tr)
    x_te, yr_te = loader(te)
    y_all, mapping = remap_labels(np.concatenate([yr_tr, yr_te]))
    y_tr, y_te = y_all[:len(yr_tr)], y_all[len(yr_tr):]
    if np.unique(y_tr).size != len(mapping):
        raise ValueError(f"{directory}: test split contains classes absent from train")
    dsname = name or os.path.basename(os.path.normpath(directory))
    train = Dataset.from_arrays(x_tr, y_tr, name=dsname, split_tag="train",
                                n_classes=len(mapping), label_mapping=mapping)
    test = Dataset.from_arrays(x_te, y_te, name=dsname, split_tag="test",
                               n_classes=len(mapping), label_mapping=mapping,
                               require_all_classes=False)
    if test.n_channels != train.n_channels or test.series_length != train.series_length:
        raise ValueError(f"{dsname}: train/test dimension mismatch")
    return train, test


@dataclass(frozen=True)
class FoldAssignment:
    """Per-sample fold index for stratified k-fold splitting."""

    fold_of: np.ndarray
    k: int
    seed: int

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of != fold)

    def heldout_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of == fold)


def stratified_kfold(y, k: int, seed: int) -> FoldAssignment:
    """Stratified fold assignment: shuffle within each class, deal round-robin.

    Every fold's per-class count is within 1 of exact proportionality.
    """
    y = np.asarray(y, dtype=np.int64)
    if k < 2:
        raise ValueError("k must be >= 2")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(y.shape[0], dtype=np.int64)
    for cls in np.unique(y):
        members = np.flatnonzero(y == cls)
        if members.size < k:
            raise ValueError(f"class {cls} has {members.size} members, fewer than k={k}")
        rng.shuffle(members)
        fold_of[members] = np.arange(members.size) % k
    return FoldAssignment(fold_of=fold_of, k=k, seed=seed)


def subsample_indices(n: int, cap: int, seed: int) -> np.ndarray:
    """min(cap, n) distinct indices, uniform without replacement, sorted."""
    if n < 1 or cap < 1:
        raise ValueError("n and cap must be >= 1")
    if cap >= n:
        return np.arange(n, dtype=np.int64)
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(n, size=cap, replace=False)).astype(np.int64)
