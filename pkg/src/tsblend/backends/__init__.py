"""Backend selection for the two hot kernels.

The compiled Cython extension (``_core``) is preferred when it built;
otherwise the numpy fallback (``reference``) is used. Both expose the same
two functions with identical semantics:

    hydra_counts(x, weights, sel, dilation) -> (hard, soft)
    split_scan(x, y, idx, feats, u, n_classes) -> (best, thresholds, gains)

Set ``TSBLEND_BACKEND=reference`` or ``=compiled`` to force one.
"""

import os

from tsblend.backends import reference

try:
    from tsblend.backends import _core as _compiled
except ImportError:
    _compiled = None

HAVE_COMPILED = _compiled is not None

_forced = os.environ.get("TSBLEND_BACKEND", "").strip().lower()
if _forced == "reference":
    _active = reference
elif _forced == "compiled":
    if _compiled is None:
        raise ImportError("TSBLEND_BACKEND=compiled but the extension is not built")
    _active = _compiled
elif _forced:
    raise ImportError(f"unknown TSBLEND_BACKEND value {_forced!r}")
else:
    _active = _compiled if HAVE_COMPILED else reference

BACKEND_NAME = "compiled" if _active is _compiled else "reference"

hydra_counts = _active.hydra_counts
split_scan = _active.split_scan
