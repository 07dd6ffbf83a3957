"""Closed-form coefficient sequences: the explicit constructions and witness families.

All providers are lazy: ``terms(lo, hi)`` evaluates the closed form on the
requested indices only, so sums over ``10**8`` terms never materialise the
sequence.  The block schedules ``n_j`` are exposed in ``provider.meta``.

Block layout shared by the two divergent constructions (``n_j`` the schedule,
``L_j`` a per-generation log scale)::

    m < 40                                   a_m = 1
    4 k n_j     <= m < (4k+2) n_j            a_m = 1 / (sqrt(L_j) m)
    (4k+2) n_j  <= m < 4 (k+1) n_j           a_m = 1 / (8 sqrt(L_j) m)

with ``k`` running over ``1 .. n_{j+1}/n_j - 1`` (Theorem-1 schedule) or
``1 .. 2[sqrt(M_{4 n_j})] - 1`` (Theorem-6 schedule); in both cases the
blocks of generation ``j`` tile ``[4 n_j, 4 n_{j+1})``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .sequences import LazySequence, SequenceProvider

__all__ = [
    "Thm1Spec",
    "Thm6Spec",
    "Prop3Spec",
    "gen_thm1",
    "gen_thm6",
    "gen_prop3",
    "gen_family",
    "FAMILIES",
    "block_layout",
]

# index bound keeping 4 * n_{j+1} and the modular arithmetic inside int64
_INDEX_CAP = 1 << 61


@dataclass(frozen=True)
class Thm1Spec:
    """Schedule ``n_1 = 1, n_2 = 10, n_{j+1} = n_j**2``; generations 2..j_max."""

    j_max: int = 3

    def __post_init__(self):
        if self.j_max < 2:
            raise ValueError("j_max must be >= 2")
        if 4 * self.schedule()[-1] > _INDEX_CAP:
            raise ValueError(f"j_max={self.j_max} overflows the 64-bit index range")

    def schedule(self) -> list:
        """``[n_1, ..., n_{j_max+1}]``."""
        n = [1, 10]
        while len(n) < self.j_max + 1:
            n.append(n[-1] ** 2)
        return n


@dataclass(frozen=True)
class Thm6Spec:
    """Schedule ``n_{j+1} = 2 [M_{4 n_j}^{1/2}] n_j`` driven by a growth sequence ``M``.

    ``strict`` enforces ``M_1 >= 10`` and ``M`` non-decreasing on the indices
    the construction queries; tests may switch it off to freeze ``M``.
    """

    M: SequenceProvider
    j_max: int = 3
    strict: bool = True

    def __post_init__(self):
        if self.j_max < 2:
            raise ValueError("j_max must be >= 2")
        sched = self.schedule()
        if self.strict:
            if self.M.term(1) < 10:
                raise ValueError(f"M_1 = {self.M.term(1)} < 10")
            probe = self.M.terms(1, 4 * sched[-2])
            if (np.diff(probe) < 0).any():
                k = int(np.flatnonzero(np.diff(probe) < 0)[0]) + 1
                raise ValueError(f"M decreases at index {k}")
        if 4 * sched[-1] > _INDEX_CAP:
            raise ValueError(f"j_max={self.j_max} overflows the 64-bit index range")

    def schedule(self) -> list:
        n = [1, 10]
        while len(n) < self.j_max + 1:
            nj = n[-1]
            half = math.floor(math.sqrt(self.M.term(4 * nj)))
            if half < 1:
                raise ValueError(f"[M_{4 * nj}^(1/2)] = 0; schedule stalls")
            n.append(2 * half * nj)
        return n

    def log_scales(self) -> list:
        """``log M_{4 n_j}`` for ``j = 2..j_max``."""
        sched = self.schedule()
        return [math.log(self.M.term(4 * sched[j - 1])) for j in range(2, self.j_max + 1)]


@dataclass(frozen=True)
class Prop3Spec:
    """Zero bands ``[2^k, 2^k + k)`` and ``[2^{k+1} - k, 2^{k+1})`` cut into a non-increasing base."""

    b: SequenceProvider
    k_max: int = 16
    check_base: bool = True

    def __post_init__(self):
        if not 1 <= self.k_max <= 50:
            raise ValueError("k_max must be in [1, 50]")
        last = 2 ** (self.k_max + 1) - 1
        if self.b.limit is not None and self.b.limit < last:
            raise ValueError(f"base {self.b.label} too short: needs index {last}")
        if self.check_base:
            probe = self.b.terms(1, min(last, 1 << 22))
            if (np.diff(probe) > 0).any():
                k = int(np.flatnonzero(np.diff(probe) > 0)[0]) + 1
                raise ValueError(f"base {self.b.label} increases at index {k}")


def block_layout(m: np.ndarray, schedule: list, log_scales: list) -> np.ndarray:
    """Evaluate the shared two-level block formula at indices ``m``.

    ``schedule`` is ``[n_1, .., n_{J+1}]``; ``log_scales[i]`` belongs to
    generation ``j = i + 2``.  Indices below ``4 n_2 = 40`` map to 1.
    """
    m = np.asarray(m, dtype=np.int64)
    starts = np.array([4 * n for n in schedule[1:]], dtype=np.int64)  # 4 n_2 .. 4 n_{J+1}
    if m.size:
        lo, hi = m.min(), m.max()
        g_lo, g_hi = np.searchsorted(starts, [lo, hi], side="right") - 1
        if lo >= starts[0] and g_lo == g_hi:
            # whole array inside one generation: scalar parameters
            nj = schedule[g_lo + 1]
            root = math.sqrt(log_scales[g_lo])
            damp = np.where(m % (4 * nj) < 2 * nj, root, 8.0 * root)
            return 1.0 / (damp * m)
    out = np.ones(m.shape, dtype=np.float64)
    sel = m >= starts[0]
    if not sel.any():
        return out
    mm = m[sel]
    g = np.searchsorted(starts, mm, side="right") - 1
    nj = np.array(schedule[1:-1], dtype=np.int64)[g]
    root = np.sqrt(np.array(log_scales, dtype=np.float64))[g]
    r = mm % (4 * nj)
    damp = np.where(r < 2 * nj, 1.0, 8.0)
    out[sel] = 1.0 / (damp * root * mm)
    return out


def gen_thm1(spec: Thm1Spec) -> LazySequence:
    sched = spec.schedule()
    logs = [math.log(n) for n in sched[1:-1]]
    limit = 4 * sched[-1] - 1
    return LazySequence(
        lambda m: block_layout(m, sched, logs),
        label=f"thm1(j_max={spec.j_max})",
        limit=limit,
        meta={"generator": "thm1", "j_max": spec.j_max, "schedule": sched, "log_scales": logs},
    )


def gen_thm6(spec: Thm6Spec) -> LazySequence:
    sched = spec.schedule()
    logs = spec.log_scales()
    limit = 4 * sched[-1] - 1
    return LazySequence(
        lambda m: block_layout(m, sched, logs),
        label=f"thm6(M={spec.M.label}, j_max={spec.j_max})",
        limit=limit,
        meta={"generator": "thm6", "j_max": spec.j_max, "schedule": sched, "log_scales": logs,
              "M": spec.M.label},
    )


def _dyadic_level(n: np.ndarray) -> np.ndarray:
    # floor(log2 n) for 1 <= n < 2**53, exact
    return np.frexp(n.astype(np.float64))[1].astype(np.int64) - 1


def gen_prop3(spec: Prop3Spec) -> LazySequence:
    base = spec.b

    def f(n):
        n = np.asarray(n, dtype=np.int64)
        k = _dyadic_level(n)
        lo = np.left_shift(np.int64(1), k)
        zero = (n - lo < k) | (2 * lo - n <= k)
        out = np.asarray(base._eval(n), dtype=np.float64).copy()
        out[zero] = 0.0
        return out

    return LazySequence(
        f,
        label=f"prop3(b={base.label}, k_max={spec.k_max})",
        limit=2 ** (spec.k_max + 1) - 1,
        meta={"generator": "prop3", "k_max": spec.k_max, "base": base.label,
              "schedule": [2 ** k for k in range(spec.k_max + 2)]},
    )


# ---------------------------------------------------------------------------
# witness families

def _power(p: float):
    def f(k):
        return 1.0 / np.power(np.asarray(k, dtype=np.float64), p)
    return f


def _log_damped(k):
    k = np.asarray(k, dtype=np.float64)
    return 1.0 / (k * (1.0 + np.log(k)))


def _constant(c: float):
    def f(k):
        return np.full(np.shape(k), float(c))
    return f


def _cqms_sawtooth(k):
    # a_k = k / 4**j on [2**j, 2**(j+1)): a_k / k non-increasing, a_k itself rises inside each block
    k = np.asarray(k, dtype=np.int64)
    j = _dyadic_level(k)
    return k.astype(np.float64) * np.ldexp(1.0, -2 * j)


def _nbvs_bands(p: float):
    # zeros on [3*2**j, 3*2**j + j) for odd j >= 3; doubling a banded index never lands in a band
    base = _power(p)

    def f(k):
        k = np.asarray(k, dtype=np.int64)
        out = base(k)
        j = _dyadic_level(k) - 1  # 3*2**j lies in [2**(j+1), 2**(j+2))
        start = 3 * np.left_shift(np.int64(1), np.maximum(j, 0))
        band = (j >= 3) & (j % 2 == 1) & (k >= start) & (k < start + j)
        out = np.where(band, 0.0, out)
        return out

    return f


def _log_ceiling(scale: float):
    # scale * ceil(log2(n + 2))
    def f(n):
        n = np.asarray(n, dtype=np.int64)
        bits = np.frexp((n + 1).astype(np.float64))[1]
        return scale * bits.astype(np.float64)
    return f


FAMILIES = ("power_p", "log_damped", "constant", "cqms_sawtooth", "nbvs_bands", "log_ceiling")


def gen_family(name: str, limit: Optional[int] = None, **params) -> LazySequence:
    """Standard witness sequences.

    ========================  ==============================================
    ``power_p`` (p=1)         ``1 / k**p``
    ``log_damped``            ``1 / (k (1 + ln k))``
    ``constant`` (c=1)        ``c``
    ``cqms_sawtooth``         ``k 4**-j`` on ``[2**j, 2**(j+1))``
    ``nbvs_bands`` (p=1)      ``1/k**p`` with zero bands of growing length
    ``log_ceiling`` (scale)   ``scale * ceil(log2(n + 2))`` (growth sequence)
    ========================  ==============================================
    """
    if name == "power_p":
        p = float(params.get("p", 1.0))
        if p < 0:
            raise ValueError("power_p needs p >= 0")
        return LazySequence(_power(p), f"power_p(p={p:g})", limit, {"family": name, "p": p})
    if name == "log_damped":
        return LazySequence(_log_damped, "log_damped", limit, {"family": name})
    if name == "constant":
        c = float(params.get("c", 1.0))
        if c < 0:
            raise ValueError("constant needs c >= 0")
        return LazySequence(_constant(c), f"constant(c={c:g})", limit, {"family": name, "c": c})
    if name == "cqms_sawtooth":
        return LazySequence(_cqms_sawtooth, "cqms_sawtooth", limit, {"family": name})
    if name == "nbvs_bands":
        p = float(params.get("p", 1.0))
        return LazySequence(_nbvs_bands(p), f"nbvs_bands(p={p:g})", limit, {"family": name, "p": p})
    if name == "log_ceiling":
        scale = float(params.get("scale", 10.0))
        return LazySequence(_log_ceiling(scale), f"log_ceiling(scale={scale:g})", limit,
                            {"family": name, "scale": scale})
    raise ValueError(f"unknown family {name!r}; expected one of {FAMILIES}")
