"""Indexed access to nonnegative real coefficient sequences.

Every provider is 1-indexed (``a_0 = 0`` by convention and never stored) and
exposes two access paths: :meth:`SequenceProvider.term` for a single index and
:meth:`SequenceProvider.terms` for an inclusive block of indices returned as a
``float64`` array.  All numerical code in the package pulls blocks; the scalar
path exists for convenience and tests.

Providers are immutable after construction, so concurrent reads are safe.
"""

from __future__ import annotations

import math
from typing import Callable, Optional

import numpy as np

__all__ = [
    "SequenceRangeError",
    "SequenceProvider",
    "ExplicitSequence",
    "LazySequence",
    "ScaledSequence",
    "neumaier_sum",
    "window_sum",
]


class SequenceRangeError(IndexError):
    """Raised when an index falls outside a provider's valid range."""


class SequenceProvider:
    """Base class for nonnegative sequences ``a_1, a_2, ...``.

    Subclasses implement :meth:`_eval`, a vectorised map from an ``int64``
    index array to term values.  ``known_length`` is set for materialised
    prefixes; ``limit`` is the largest valid index for any provider with a
    finite range (closed-form generators have a generated range even though
    they have no known length).  ``limit is None`` means unbounded.
    """

    label: str = "sequence"
    known_length: Optional[int] = None
    limit: Optional[int] = None

    def _eval(self, k: np.ndarray) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def _check(self, lo: int, hi: int) -> None:
        if lo < 1:
            raise SequenceRangeError(f"{self.label}: index {lo} < 1")
        if self.limit is not None and hi > self.limit:
            raise SequenceRangeError(
                f"{self.label}: index {hi} beyond available range (last index {self.limit})"
            )

    def term(self, k: int) -> float:
        k = int(k)
        self._check(k, k)
        return float(self._eval(np.array([k], dtype=np.int64))[0])

    def terms(self, lo: int, hi: int) -> np.ndarray:
        """Return ``[a_lo, ..., a_hi]`` (inclusive); empty when ``hi < lo``."""
        lo, hi = int(lo), int(hi)
        if hi < lo:
            return np.zeros(0)
        self._check(lo, hi)
        vals = np.asarray(self._eval(np.arange(lo, hi + 1, dtype=np.int64)), dtype=np.float64)
        if vals.size and (vals.min() < 0 or np.isnan(vals).any()):
            bad = int(np.flatnonzero((vals < 0) | np.isnan(vals))[0]) + lo
            raise ValueError(f"{self.label}: term {bad} is negative or NaN")
        return vals

    def in_range(self, k: int) -> bool:
        return k >= 1 and (self.limit is None or k <= self.limit)

    def require_limit(self, stop: Optional[int] = None) -> int:
        """Resolve a finite last index for tail computations."""
        if stop is not None:
            if self.limit is not None and stop > self.limit:
                raise SequenceRangeError(
                    f"{self.label}: stop {stop} beyond available range (last index {self.limit})"
                )
            return int(stop)
        if self.limit is None:
            raise SequenceRangeError(f"{self.label}: unbounded sequence needs an explicit stop index")
        return int(self.limit)

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.label!r}, limit={self.limit})"


class ExplicitSequence(SequenceProvider):
    """A materialised prefix ``a_1..a_K``."""

    def __init__(self, values, label: str = "explicit"):
        arr = np.array(values, dtype=np.float64).ravel()
        if np.isnan(arr).any():
            raise ValueError(f"{label}: NaN at index {int(np.flatnonzero(np.isnan(arr))[0]) + 1}")
        if (arr < 0).any():
            raise ValueError(f"{label}: negative term at index {int(np.flatnonzero(arr < 0)[0]) + 1}")
        arr.setflags(write=False)
        self._values = arr
        self.label = label
        self.known_length = int(arr.size)
        self.limit = int(arr.size)

    @property
    def values(self) -> np.ndarray:
        return self._values

    def _eval(self, k):
        return self._values[k - 1]


class LazySequence(SequenceProvider):
    """Closed-form sequence backed by a vectorised function of the index.

    ``func`` receives an ``int64`` array and must return an array of the same
    shape.  No values are cached.
    """

    def __init__(self, func: Callable[[np.ndarray], np.ndarray], label: str,
                 limit: Optional[int] = None, meta: Optional[dict] = None):
        self._func = func
        self.label = label
        self.limit = limit
        self.meta = dict(meta or {})

    def _eval(self, k):
        return self._func(k)


class ScaledSequence(SequenceProvider):
    """``s * a`` for a fixed positive scale ``s``."""

    def __init__(self, base: SequenceProvider, scale: float):
        if not scale > 0:
            raise ValueError("scale must be positive")
        self.base = base
        self.scale = float(scale)
        self.label = f"{scale:g}*{base.label}"
        self.known_length = base.known_length
        self.limit = base.limit

    def _eval(self, k):
        return self.scale * self.base._eval(k)


def neumaier_sum(values) -> float:
    """Compensated (Kahan-Babuska) sum of an iterable of floats."""
    s = 0.0
    c = 0.0
    for v in values:
        v = float(v)
        t = s + v
        if abs(s) >= abs(v):
            c += (s - t) + v
        else:
            c += (v - t) + s
        s = t
    return s + c


_CHUNK = 1 << 22


def window_sum(seq: SequenceProvider, lo: int, hi: int) -> float:
    """Accurate sum of ``a_lo..a_hi`` (inclusive), chunked for long windows.

    Each chunk is reduced with numpy's pairwise summation and the chunk totals
    are combined with :func:`math.fsum`.
    """
    lo = max(int(lo), 1)
    hi = int(hi)
    if hi < lo:
        return 0.0
    parts = []
    for start in range(lo, hi + 1, _CHUNK):
        stop = min(hi, start + _CHUNK - 1)
        parts.append(float(np.sum(seq.terms(start, stop))))
    return math.fsum(parts)
