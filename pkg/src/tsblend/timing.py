"""Wall clock phase accumulation for benchmark runs."""

from __future__ import annotations

import time
from contextlib import contextmanager

__all__ = ["PhaseTimer"]


class PhaseTimer:
    """Accumulates elapsed seconds per named phase.

    Phases may be entered repeatedly (for example once per fold); the
    durations add up. ``as_dict`` returns plain floats suitable for JSON.
    """

    def __init__(self):
        self.totals = {}

    @contextmanager
    def phase(self, name):
        start = time.perf_counter()
        try:
            yield
        finally:
            elapsed = time.perf_counter() - start
            self.totals[name] = self.totals.get(name, 0.0) + elapsed

    def add(self, name, seconds):
        self.totals[name] = self.totals.get(name, 0.0) + float(seconds)

    def as_dict(self):
        return dict(self.totals)
