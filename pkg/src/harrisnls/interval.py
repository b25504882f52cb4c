"""Closed intervals on the real line, used for small sets and occupation bins."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class Interval:
    """Closed interval [lo, hi]. lo > hi denotes the empty set."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)):
            raise DomainError("interval endpoints must be finite")

    @property
    def is_empty(self) -> bool:
        return self.lo > self.hi

    @property
    def length(self) -> float:
        return 0.0 if self.is_empty else self.hi - self.lo

    def contains(self, values):
        """Vectorized membership test; empty intervals contain nothing."""
        values = np.asarray(values)
        if self.is_empty:
            return np.zeros(values.shape, dtype=bool)
        return (values >= self.lo) & (values <= self.hi)

    def __str__(self) -> str:
        return f"[{self.lo:g}, {self.hi:g}]"
