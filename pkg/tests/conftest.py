"""Shared synthetic data builders for the test suite.

Everything here is seeded and deterministic. The builders encode a few
structural facts the tests lean on repeatedly:

* hydra count features are exactly invariant to a global sign flip of the
  input (the competition runs on |response|) and to constant offsets
  (kernels are mean-centered), so a label carried only by the sign of the
  series is invisible to the hydra branch;
* a quantile summary of a window cannot tell a transient from its own
  time reversal (same value multiset, same Fourier magnitudes), so a
  label carried only by the orientation of a planted transient is nearly
  invisible to the quant branch.

Combining both bits in one dataset gives two branches with disjoint
blind spots, which is what the ensemble tests need.
"""

import numpy as np

from tsblend.data import Dataset
from tsblend import ensembles

# Asymmetric transient: slow ramp, sharp crash. Reversing it preserves
# the value multiset and the rfft magnitudes.
RAMP = np.array([0.5, 0.8, 1.1, 1.4, 1.7, 2.0, -3.0])


def planted_arrays(n, seed, length=64, pat_gain=1.5, offset=0.6, classes4=True):
    """Series with a sign bit and an orientation bit.

    bit a: whole series multiplied by -1 (hydra-blind, quant sees it via
           the location of every quantile).
    bit b: planted RAMP vs reversed RAMP at a random position
           (quant-blind, hydra separates it easily).

    classes4=True labels y = 2a + b, otherwise y = a XOR b.
    """
    rng = np.random.default_rng(seed)
    a = rng.integers(0, 2, n)
    b = rng.integers(0, 2, n)
    y = (2 * a + b) if classes4 else (a ^ b)
    x = np.empty((n, 1, length))
    for i in range(n):
        s = rng.standard_normal(length) + offset
        pos = rng.integers(0, length - len(RAMP) + 1)
        pat = (RAMP[::-1] if b[i] else RAMP) * pat_gain
        s[pos:pos + len(RAMP)] += pat
        x[i, 0] = -s if a[i] else s
    return x, y.astype(np.int64)


def planted_dataset(n, seed, length=64, pat_gain=1.5, classes4=True,
                    split_tag="train"):
    x, y = planted_arrays(n, seed, length=length, pat_gain=pat_gain,
                          classes4=classes4)
    return Dataset.from_arrays(x, y, name="planted", split_tag=split_tag)


def sign_arrays(n, seed, length=64, offset=0.6):
    """Label is only the global sign of an offset noise series.

    No transient is planted, so the hydra branch is structurally blind
    (exactly invariant features) while the quant branch separates the
    classes from any location quantile.
    """
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, n).astype(np.int64)
    x = rng.standard_normal((n, 1, length)) + offset
    x[y == 1] *= -1.0
    return x, y


def sign_dataset(n, seed, length=64, split_tag="train"):
    x, y = sign_arrays(n, seed, length=length)
    return Dataset.from_arrays(x, y, name="signbit", split_tag=split_tag)


def blob_dataset(n, seed, n_classes=2, n_channels=1, length=40, gap=1.5,
                 name="blobs", split_tag="train"):
    """Easy dataset: class c raises the first half of the series by gap*c."""
    rng = np.random.default_rng(seed)
    y = np.arange(n) % n_classes
    rng.shuffle(y)
    x = rng.standard_normal((n, n_channels, length))
    for cls in range(1, n_classes):
        x[y == cls, :, : length // 2] += gap * cls
    return Dataset.from_arrays(x, y.astype(np.int64), name=name,
                               split_tag=split_tag)


def xor_tabular(n, rng, noise=0.3, n_noise=8):
    """Tabular XOR: sign product of two noisy coordinates, plus noise dims."""
    s = rng.integers(0, 2, (n, 2)) * 2 - 1
    x = np.concatenate(
        [s + rng.normal(0.0, noise, (n, 2)), rng.standard_normal((n, n_noise))],
        axis=1)
    y = ((s[:, 0] * s[:, 1]) > 0).astype(np.int64)
    return x, y


class Memorizer:
    """1-nearest-neighbour pipeline: perfect in sample, honest out of sample.

    Used to prove the out-of-fold machinery never lets a row be scored by
    a model that saw it during fitting.
    """

    def fit(self, ds):
        self._x = ds.x.reshape(ds.n_instances, -1).astype(np.float64)
        self._y = ds.y.copy()
        self._c = ds.n_classes
        return self

    def predict_proba(self, ds):
        q = ds.x.reshape(ds.n_instances, -1).astype(np.float64)
        d2 = ((q[:, None, :] - self._x[None, :, :]) ** 2).sum(axis=2)
        nearest = self._y[np.argmin(d2, axis=1)]
        probs = np.zeros((ds.n_instances, self._c))
        probs[np.arange(ds.n_instances), nearest] = 1.0
        return probs


class Tripwire:
    """Dataset proxy whose arrays blow up if touched during any fit phase.

    Wraps a test split; strategies may only look at test data once all
    fitting is over, so reading .x or .y while ensembles.in_fit_phase()
    is True is a training-on-test leak.
    """

    def __init__(self, ds):
        object.__setattr__(self, "_ds", ds)

    @property
    def x(self):
        if ensembles.in_fit_phase():
            raise AssertionError("test split features read during a fit phase")
        return self._ds.x

    @property
    def y(self):
        if ensembles.in_fit_phase():
            raise AssertionError("test split labels read during a fit phase")
        return self._ds.y

    def __getattr__(self, name):
        return getattr(object.__getattribute__(self, "_ds"), name)


def accuracy(pred, y):
    return float(np.mean(np.asarray(pred) == np.asarray(y)))


def write_split_dir(dirpath, train, test):
    """Write a train/test pair in the binary container format."""
    from tsblend.data import save_dataset

    dirpath.mkdir(parents=True, exist_ok=True)
    save_dataset(train, dirpath / "train.tsd")
    save_dataset(test, dirpath / "test.tsd")
    return dirpath
