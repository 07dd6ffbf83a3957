"""Defect functionals and window certificates for generalized-monotone classes.

Each class is defined by an inequality ``LHS(n) <= C * RHS(n)`` that must hold
for every ``n``.  The *defect* at ``n`` is ``LHS/RHS`` with the conventions

* ``LHS == 0``            -> ``0`` (inequality holds vacuously),
* ``LHS > 0, RHS == 0``   -> ``inf`` (no constant can work),

so a sequence belongs to a class exactly when its defect is bounded.  On a
finite window we can only estimate the bound; :func:`certify` turns a defect
profile into a window-relative verdict.

Supported classes::

    MS     a_{n+1} <= a_n
    CQMS   a_n / n**alpha non-increasing
    RVQMS  a_n / R(n) non-increasing, R non-decreasing with R(2n)/R(n) bounded
    RBVS   sum_{k>=n} |a_k - a_{k+1}|          <= C a_n
    GBVS   sum_{k=n}^{2n} |a_k - a_{k+1}|     <= C max_{n<=k<n+N0} a_k
    NBVS   sum_{k=n}^{2n} |a_k - a_{k+1}|     <= C (a_n + a_{2n})
    AMS    a_k                                <= C a_n   for all k >= n
    MVBVS  sum_{k=n}^{2n} |a_k - a_{k+1}|     <= (C/n) sum_{k=[n/lam]}^{[lam n]} a_k
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from .sequences import SequenceProvider, SequenceRangeError

__all__ = [
    "CLASS_IDS",
    "SLOPE_THRESHOLD",
    "DEFAULT_LAMBDAS",
    "ClassParams",
    "DefectEntry",
    "DefectProfile",
    "Certificate",
    "MonotoneCheck",
    "defect_ratio",
    "delta",
    "variation",
    "mvbv_defect",
    "rbv_defect",
    "gbv_defect",
    "nbv_defect",
    "ams_defect",
    "ams_profile",
    "cqms_check",
    "rvqms_check",
    "defect_profile",
    "certify",
    "certify_mvbvs",
    "judge_profile",
    "na_n_probe",
    "lemma8_sides",
    "lemma8_bound_check",
    "mvbv_window",
]

CLASS_IDS = ("MS", "CQMS", "RVQMS", "RBVS", "GBVS", "NBVS", "AMS", "MVBVS")
MONOTONE_CLASSES = frozenset({"MS", "CQMS", "RVQMS"})
TAIL_CLASSES = frozenset({"RBVS", "AMS"})

SLOPE_THRESHOLD = 0.15
DEFAULT_LAMBDAS = (2.0, 3.0, 5.0, 8.0)

_CHUNK = 1 << 22


def defect_ratio(lhs: float, rhs: float) -> float:
    if lhs == 0:
        return 0.0
    if rhs == 0:
        return math.inf
    # plain floats: a ratio beyond the double range becomes inf without a numpy warning
    return float(lhs) / float(rhs)


def _fmt(x: float):
    return "inf" if math.isinf(x) else x


@dataclass(frozen=True)
class ClassParams:
    class_id: str
    lam: float = 2.0
    n0_group: int = 1
    alpha: float = 0.0
    R: Optional[SequenceProvider] = None

    def __post_init__(self):
        cid = self.class_id.upper()
        object.__setattr__(self, "class_id", cid)
        if cid not in CLASS_IDS:
            raise ValueError(f"unknown class_id {self.class_id!r}; expected one of {CLASS_IDS}")
        if not self.lam >= 2:
            raise ValueError(f"lambda must be >= 2, got {self.lam}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if int(self.n0_group) != self.n0_group or self.n0_group < 1:
            raise ValueError(f"n0_group must be a positive integer, got {self.n0_group}")
        if cid == "RVQMS" and self.R is None:
            raise ValueError("RVQMS needs a regulator sequence R")

    def to_dict(self) -> dict:
        d = {"class_id": self.class_id}
        if self.class_id == "MVBVS":
            d["lambda"] = self.lam
        elif self.class_id == "GBVS":
            d["n0_group"] = int(self.n0_group)
        elif self.class_id == "CQMS":
            d["alpha"] = self.alpha
        elif self.class_id == "RVQMS":
            d["R"] = self.R.label
        return d


class DefectEntry(NamedTuple):
    n: int
    lhs: float
    rhs: float
    defect: float


@dataclass
class DefectProfile:
    class_id: str
    params: ClassParams
    entries: list = field(default_factory=list)

    def defects(self) -> np.ndarray:
        return np.array([e.defect for e in self.entries], dtype=np.float64)

    def to_dict(self) -> dict:
        return {
            "class_id": self.class_id,
            "params": self.params.to_dict(),
            "entries": [[e.n, e.lhs, e.rhs, _fmt(e.defect)] for e in self.entries],
        }


@dataclass
class Certificate:
    """Window-relative membership verdict with the evidence that produced it.

    ``truncated`` is set for tail classes (RBVS, AMS) evaluated on finite data:
    their defects are then lower bounds of the infinite-tail values, so a
    rejection is sound while acceptance only speaks for the data seen.
    """

    class_id: str
    params: ClassParams
    window: tuple
    constant_estimate: float
    verdict: str
    growth_slope: float
    profile: DefectProfile
    truncated: bool = False
    tail_stop: Optional[int] = None

    @property
    def member(self) -> bool:
        return self.verdict == "member_on_window"

    def to_dict(self) -> dict:
        d = {
            "class_id": self.class_id,
            "params": self.params.to_dict(),
            "window": [int(self.window[0]), int(self.window[1])],
            "entries": self.profile.to_dict()["entries"],
            "constant_estimate": _fmt(self.constant_estimate),
            "growth_slope": self.growth_slope,
            "verdict": self.verdict,
        }
        if self.truncated:
            d["truncated_tail"] = True
            d["tail_stop"] = self.tail_stop
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


class MonotoneCheck(NamedTuple):
    ok: bool
    first_violation: Optional[int]
    sup_ratio: Optional[float] = None


# ---------------------------------------------------------------------------
# local block access

class _Block:
    """Terms ``a_lo..a_hi`` fetched once, with inclusive-range helpers."""

    __slots__ = ("lo", "hi", "a")

    def __init__(self, seq: SequenceProvider, lo: int, hi: int):
        self.lo = max(1, int(lo))
        self.hi = int(hi)
        self.a = seq.terms(self.lo, self.hi)

    def at(self, k: int) -> float:
        return float(self.a[k - self.lo])

    def total(self, i: int, j: int) -> float:
        return float(np.sum(self.a[i - self.lo: j - self.lo + 1]))

    def var(self, i: int, j: int) -> float:
        # sum_{k=i}^{j} |a_k - a_{k+1}|
        seg = self.a[i - self.lo: j - self.lo + 2]
        return float(np.sum(np.abs(np.diff(seg))))

    def vmax(self, i: int, j: int) -> float:
        return float(np.max(self.a[i - self.lo: j - self.lo + 1]))


def mvbv_window(n: int, lam: float) -> tuple:
    """Index window ``([n/lam], [lam n])`` with the lower end clamped at 1."""
    return max(1, math.floor(n / lam)), math.floor(lam * n)


def _need_range(class_id: str, n: int, params: ClassParams) -> tuple:
    if class_id == "MVBVS":
        lo, hi = mvbv_window(n, params.lam)
        return min(lo, n), max(hi, 2 * n + 1)
    if class_id == "GBVS":
        return n, max(2 * n + 1, n + int(params.n0_group) - 1)
    if class_id == "NBVS":
        return n, 2 * n + 1
    if class_id in MONOTONE_CLASSES:
        return n, n + 1
    raise ValueError(class_id)


def _local_sides(class_id: str, blk: _Block, n: int, params: ClassParams, w=None):
    if class_id == "MVBVS":
        lo, hi = mvbv_window(n, params.lam)
        return blk.var(n, 2 * n), blk.total(lo, hi) / n
    if class_id == "GBVS":
        return blk.var(n, 2 * n), blk.vmax(n, n + int(params.n0_group) - 1)
    if class_id == "NBVS":
        return blk.var(n, 2 * n), blk.at(n) + blk.at(2 * n)
    if class_id in MONOTONE_CLASSES:
        wn, wn1 = w(n), w(n + 1)
        return blk.at(n + 1) / wn1, blk.at(n) / wn
    raise ValueError(class_id)


# ---------------------------------------------------------------------------
# single-index operations

def delta(seq: SequenceProvider, k: int) -> float:
    """Signed first difference ``a_k - a_{k+1}``."""
    if k < 1:
        raise SequenceRangeError(f"delta index {k} < 1")
    pair = seq.terms(k, k + 1)
    return float(pair[0] - pair[1])


def variation(seq: SequenceProvider, lo: int, hi: int) -> float:
    """``sum_{k=lo}^{hi} |a_k - a_{k+1}|``."""
    if hi < lo:
        return 0.0
    parts = []
    for start in range(lo, hi + 1, _CHUNK):
        stop = min(hi, start + _CHUNK - 1)
        parts.append(float(np.sum(np.abs(np.diff(seq.terms(start, stop + 1))))))
    return math.fsum(parts)


def _single(seq, class_id, n, params):
    lo, hi = _need_range(class_id, n, params)
    blk = _Block(seq, lo, hi)
    lhs, rhs = _local_sides(class_id, blk, n, params)
    return defect_ratio(lhs, rhs)


def mvbv_defect(seq: SequenceProvider, n: int, lam: float = 2.0) -> float:
    return _single(seq, "MVBVS", n, ClassParams("MVBVS", lam=lam))


def gbv_defect(seq: SequenceProvider, n: int, n0_group: int = 1) -> float:
    return _single(seq, "GBVS", n, ClassParams("GBVS", n0_group=n0_group))


def nbv_defect(seq: SequenceProvider, n: int) -> float:
    return _single(seq, "NBVS", n, ClassParams("NBVS"))


def rbv_defect(seq: SequenceProvider, n: int, stop: Optional[int] = None) -> float:
    """Truncated rest-variation defect ``sum_{k=n}^{K-1}|Δa_k| / a_n``.

    ``K`` is ``stop`` or the last available index.  The result is a lower
    bound of the infinite-tail defect.
    """
    K = seq.require_limit(stop)
    if n < 1 or n > K:
        raise SequenceRangeError(f"rbv index {n} outside [1, {K}]")
    return defect_ratio(variation(seq, n, K - 1), seq.term(n))


def _suffix_max_at(seq: SequenceProvider, ns: Sequence[int], stop: int, weighted: bool = False) -> np.ndarray:
    """``max_{n<=k<=stop} w_k a_k`` for each ``n`` in ``ns`` in one reverse pass.

    ``w_k = k`` when ``weighted`` else ``1``.
    """
    ns = np.asarray(ns, dtype=np.int64)
    if ns.size == 0:
        return np.zeros(0)
    if ns.min() < 1 or ns.max() > stop:
        raise SequenceRangeError(f"indices must lie in [1, {stop}]")
    order = np.argsort(ns)
    sorted_ns = ns[order]
    out_sorted = np.empty(ns.size)
    lo_all = int(sorted_ns[0])
    running = -np.inf
    pos = ns.size - 1
    hi = stop
    while hi >= lo_all and pos >= 0:
        lo = max(lo_all, hi - _CHUNK + 1)
        vals = seq.terms(lo, hi)
        if weighted:
            vals = vals * np.arange(lo, hi + 1, dtype=np.float64)
        smax = np.maximum.accumulate(vals[::-1])[::-1]
        smax = np.maximum(smax, running)
        while pos >= 0 and sorted_ns[pos] >= lo:
            out_sorted[pos] = smax[sorted_ns[pos] - lo]
            pos -= 1
        running = float(smax[0])
        hi = lo - 1
    out = np.empty_like(out_sorted)
    out[order] = out_sorted
    return out


def ams_defect(seq: SequenceProvider, n: int, stop: Optional[int] = None) -> float:
    """``max_{n<=k<=K} a_k / a_n`` (``K`` = ``stop`` or last available index)."""
    K = seq.require_limit(stop)
    return float(ams_profile(seq, [n], K)[0])


def ams_profile(seq: SequenceProvider, ns: Iterable[int], stop: Optional[int] = None) -> np.ndarray:
    """AMS defects at many indices sharing one suffix-max pass up to ``stop``."""
    K = seq.require_limit(stop)
    ns = np.asarray(list(ns), dtype=np.int64)
    smax = _suffix_max_at(seq, ns, K)
    an = _gather(seq, ns)
    return np.array([defect_ratio(l, r) for l, r in zip(smax, an)])


def _gather(seq: SequenceProvider, ns: np.ndarray) -> np.ndarray:
    # scattered indices: evaluate only those, not the span between them
    seq._check(int(ns.min()), int(ns.max()))
    vals = np.asarray(seq._eval(ns.astype(np.int64)), dtype=np.float64)
    if (vals < 0).any():
        raise ValueError(f"{seq.label}: negative term")
    return vals


def _monotone_weights(seq: SequenceProvider, lo: int, hi: int, kind: str, alpha: float = 0.0,
                      R: Optional[SequenceProvider] = None) -> np.ndarray:
    a = seq.terms(lo, hi)
    if kind == "CQMS":
        return a / np.power(np.arange(lo, hi + 1, dtype=np.float64), alpha)
    if kind == "RVQMS":
        return a / R.terms(lo, hi)
    return a


def cqms_check(seq: SequenceProvider, alpha: float, window: tuple) -> MonotoneCheck:
    """Is ``a_n / n**alpha`` non-increasing on ``[n_min, n_max]``?"""
    n_min, n_max = window
    v = _monotone_weights(seq, n_min, n_max, "CQMS", alpha=alpha)
    bad = np.flatnonzero(v[1:] > v[:-1])
    if bad.size:
        return MonotoneCheck(False, int(bad[0]) + n_min)
    return MonotoneCheck(True, None)


def _regulator_ratio(R: SequenceProvider, n_min: int, n_max: int) -> float:
    r = R.terms(n_min, n_max)
    if (np.diff(r) < 0).any():
        k = int(np.flatnonzero(np.diff(r) < 0)[0]) + n_min
        raise ValueError(f"regulator {R.label} decreases at index {k}")
    if (r <= 0).any():
        raise ValueError(f"regulator {R.label} must be positive")
    r2 = R.terms(2 * n_min, 2 * n_max)[::2]
    ratio = float(np.max(r2 / r))
    if not math.isfinite(ratio):
        raise ValueError(f"regulator {R.label}: R(2n)/R(n) unbounded on window")
    return ratio


def rvqms_check(seq: SequenceProvider, R: SequenceProvider, window: tuple) -> MonotoneCheck:
    """Check ``a_n / R(n)`` non-increasing and report ``sup R(2n)/R(n)``.

    Raises ``ValueError`` if ``R`` is not a valid regulator on the window.
    """
    n_min, n_max = window
    sup_ratio = _regulator_ratio(R, n_min, n_max)
    v = _monotone_weights(seq, n_min, n_max, "RVQMS", R=R)
    bad = np.flatnonzero(v[1:] > v[:-1])
    if bad.size:
        return MonotoneCheck(False, int(bad[0]) + n_min, sup_ratio)
    return MonotoneCheck(True, None, sup_ratio)


# ---------------------------------------------------------------------------
# profiles and certificates

def _profile_entries(seq, params, ns, tail_stop):
    cid = params.class_id
    ns = np.asarray(ns, dtype=np.int64)
    if ns.size == 0:
        return []
    if cid == "AMS":
        smax = _suffix_max_at(seq, ns, tail_stop)
        an = _gather(seq, ns)
        return [DefectEntry(int(n), float(l), float(r), defect_ratio(l, r)) for n, l, r in zip(ns, smax, an)]
    if cid == "RBVS":
        lo = int(ns.min())
        a = seq.terms(lo, tail_stop)
        d = np.abs(np.diff(a)).astype(np.longdouble)
        # tail[i] = sum_{k=lo+i}^{K-1} |Δa_k|; nonnegative terms, extended precision
        tail = np.concatenate([np.cumsum(d[::-1])[::-1], np.zeros(1, dtype=np.longdouble)])
        out = []
        for n in ns:
            lhs = float(tail[n - lo])
            rhs = float(a[n - lo])
            out.append(DefectEntry(int(n), lhs, rhs, defect_ratio(lhs, rhs)))
        return out
    lo = hi = None
    for n in (int(ns.min()), int(ns.max())):
        l, h = _need_range(cid, n, params)
        lo = l if lo is None else min(lo, l)
        hi = h if hi is None else max(hi, h)
    blk = _Block(seq, lo, hi)
    w = None
    if cid == "CQMS":
        w = lambda k: float(k) ** params.alpha
    elif cid == "RVQMS":
        rblk = _Block(params.R, int(ns.min()), int(ns.max()) + 1)
        w = rblk.at
    elif cid == "MS":
        w = lambda k: 1.0
    out = []
    for n in ns:
        n = int(n)
        lhs, rhs = _local_sides(cid, blk, n, params, w)
        out.append(DefectEntry(n, lhs, rhs, defect_ratio(lhs, rhs)))
    return out


def defect_profile(seq: SequenceProvider, params: ClassParams, ns: Iterable[int],
                   tail_stop: Optional[int] = None, workers: int = 1) -> DefectProfile:
    """Defect entries at every ``n`` in ``ns``.

    With ``workers > 1`` the index set is split into contiguous pieces that
    are evaluated concurrently and concatenated in order.
    """
    ns = sorted(int(n) for n in ns)
    if params.class_id in TAIL_CLASSES:
        tail_stop = seq.require_limit(tail_stop)
    if workers > 1 and len(ns) >= 2 * workers:
        pieces = np.array_split(np.asarray(ns), workers)
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(lambda p: _profile_entries(seq, params, p, tail_stop), pieces))
        entries = [e for part in parts for e in part]
    else:
        entries = _profile_entries(seq, params, ns, tail_stop)
    return DefectProfile(params.class_id, params, entries)


def _growth_slope(entries) -> float:
    pts = [(e.n, e.defect) for e in entries if 0 < e.defect < math.inf]
    if len(pts) < 2 or len({p[0] for p in pts}) < 2:
        return 0.0
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    slope = np.polyfit(x, y, 1)[0]
    return float(slope)


def judge_profile(profile: DefectProfile, slope_threshold: float = SLOPE_THRESHOLD) -> tuple:
    """``(constant_estimate, growth_slope, verdict)`` for a defect profile."""
    d = profile.defects()
    finite = d[np.isfinite(d)]
    const = float(finite.max()) if finite.size else 0.0
    slope = _growth_slope(profile.entries)
    if profile.class_id in MONOTONE_CLASSES:
        verdict = "rejected" if (d > 1.0).any() else "member_on_window"
    elif np.isinf(d).any():
        verdict = "rejected"
    elif slope > slope_threshold:
        verdict = "inconclusive_growth"
    else:
        verdict = "member_on_window"
    return const, slope, verdict


def certify(seq: SequenceProvider, params: ClassParams, window: tuple, step: int = 1,
            tail_stop: Optional[int] = None, slope_threshold: float = SLOPE_THRESHOLD,
            workers: int = 1) -> Certificate:
    """Certify class membership of ``seq`` on ``window = (n_min, n_max)``.

    Verdicts:

    * ``rejected`` if any defect is infinite (for MS/CQMS/RVQMS: if any
      defect exceeds 1, i.e. the monotonicity itself fails);
    * ``inconclusive_growth`` if the log-log least-squares slope of the finite
      defects exceeds ``slope_threshold``;
    * ``member_on_window`` otherwise.

    ``constant_estimate`` is the sup of the finite defects.
    """
    n_min, n_max = int(window[0]), int(window[1])
    if n_min < 1 or n_max < n_min:
        raise ValueError(f"invalid window {window}")
    if params.class_id == "RVQMS":
        _regulator_ratio(params.R, n_min, n_max + 1)
    ns = range(n_min, n_max + 1, step)
    prof = defect_profile(seq, params, ns, tail_stop=tail_stop, workers=workers)
    const, slope, verdict = judge_profile(prof, slope_threshold)
    truncated = params.class_id in TAIL_CLASSES
    stop = seq.require_limit(tail_stop) if truncated else None
    return Certificate(params.class_id, params, (n_min, n_max), const, verdict, slope, prof,
                       truncated=truncated, tail_stop=stop)


def certify_mvbvs(seq: SequenceProvider, window: tuple, lambdas: Sequence[float] = DEFAULT_LAMBDAS,
                  **kw) -> Certificate:
    """MVBVS certificate with ``lambda`` searched over ``lambdas``.

    Candidates whose window ``[lambda * n_max]`` exceeds the available range
    are skipped.  Members are preferred; among them the smallest constant wins.
    """
    best = None
    for lam in lambdas:
        if seq.limit is not None and max(math.floor(lam * window[1]), 2 * window[1] + 1) > seq.limit:
            continue
        cert = certify(seq, ClassParams("MVBVS", lam=lam), window, **kw)
        key = (not cert.member, cert.constant_estimate)
        if best is None or key < (not best.member, best.constant_estimate):
            best = cert
    if best is None:
        raise SequenceRangeError(f"{seq.label}: no lambda in {tuple(lambdas)} fits the available range")
    return best


def na_n_probe(seq: SequenceProvider, checkpoints: Iterable[int], stop: Optional[int] = None) -> list:
    """Running tail sup ``sup_{n0<=n<=K} n a_n`` at each checkpoint ``n0``."""
    K = seq.require_limit(stop)
    cps = [int(c) for c in checkpoints]
    vals = _suffix_max_at(seq, cps, K, weighted=True)
    return [(c, float(v)) for c, v in zip(cps, vals)]


def lemma8_sides(seq: SequenceProvider, n: int, lam: float) -> tuple:
    """``(n a_n, sum_{k=[n/(2 lam)]}^{[lam n]} a_k)`` with the lower index clamped at 1."""
    lo = max(1, math.floor(n / (2 * lam)))
    hi = math.floor(lam * n)
    blk = _Block(seq, min(lo, n), max(hi, n))
    return n * blk.at(n), blk.total(lo, hi)


def lemma8_bound_check(seq: SequenceProvider, n: int, lam: float, C: float) -> bool:
    lhs, window = lemma8_sides(seq, n, lam)
    return lhs <= C * window
