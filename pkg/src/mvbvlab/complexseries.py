"""Two-sided complex coefficients ``c_k`` (``k != 0``) and the series ``sum c_k e^{ikx}``.

Coefficients are assumed to lie in the closed sector

    K(theta0) = {z : |arg z| <= theta0},   0 <= theta0 < pi/2,

but membership is checked (:func:`cond_d1_check`), never assumed.  ``z = 0``
counts as inside.  The four coefficient conditions checked here are

    D1   c_n and c_n + c_{-n} lie in K(theta0)
    D2   sum_{k=n}^{2n} |c_k - c_{k+1}| <= (C/n) sum_{k=[n/lam]}^{[lam n]} |c_k|
    D3   n |c_n| -> 0
    D4   sum_n |c_n + c_{-n}| < inf

All sums over ``e^{+-ikx}`` are reduced to real sine and cosine sums and
evaluated with the reseeded recurrence kernels shared with
:mod:`mvbvlab.sineseries`.
"""

from __future__ import annotations

import math
from typing import Callable, Iterable, NamedTuple, Optional

import numpy as np

from . import _kernels
from .sequences import LazySequence, SequenceProvider, SequenceRangeError
from .seqclass import (SLOPE_THRESHOLD, Certificate, ClassParams, DefectEntry, DefectProfile, defect_ratio,
                       judge_profile, mvbv_window, na_n_probe)

__all__ = [
    "ComplexSequenceProvider",
    "SectorCheck",
    "D4Report",
    "WindowPhase",
    "sector_check",
    "cond_d1_check",
    "cond_d2_defect",
    "cond_d2_certify",
    "lemma12_ratio",
    "cond_d3_probe",
    "cond_d4_partial",
    "complex_block_sum",
    "complex_partial_sum",
    "complex_gap_grid",
    "lemma14_split",
    "window_phase_probe",
]

_CHUNK = 1 << 22
# |arg e^{i theta}| computed in floating point can exceed theta by one ulp
_BOUNDARY_ULPS = 2


def _check_theta(theta0: float) -> float:
    theta0 = float(theta0)
    if not 0.0 <= theta0 < math.pi / 2:
        raise ValueError(f"theta0 = {theta0!r} outside [0, pi/2)")
    return theta0


class ComplexSequenceProvider:
    """Two-sided complex sequence ``c_k``, ``|k| >= 1``, with sector angle ``theta0``.

    Parameters
    ----------
    pos, neg : callable
        Vectorised maps from an ``int64`` array of positive indices ``k`` to
        ``c_k`` and ``c_{-k}`` respectively.
    theta0 : float
        Sector half-angle in ``[0, pi/2)``.
    known_bound : int, optional
        Largest valid ``|k|``; ``None`` for closed forms.
    c0 : complex
        The constant coefficient (``0`` unless supplied).
    """

    def __init__(self, pos: Callable, neg: Callable, theta0: float = 0.0,
                 known_bound: Optional[int] = None, label: str = "complex", c0: complex = 0.0):
        self._pos = pos
        self._neg = neg
        self.theta0 = _check_theta(theta0)
        self.known_bound = None if known_bound is None else int(known_bound)
        self.label = label
        self.c0 = complex(c0)

    # -- constructors -----------------------------------------------------
    @classmethod
    def from_triples(cls, triples: Iterable, theta0: float = 0.0, label: str = "complex") -> "ComplexSequenceProvider":
        """Materialise ``[k, re, im]`` triples; unlisted indices are 0."""
        rows = [tuple(t) for t in triples]
        for i, t in enumerate(rows):
            if len(t) != 3:
                raise ValueError(f"coefficient {i}: expected [k, re, im], got {list(t)}")
        ks = [int(t[0]) for t in rows]
        for i, (t, k) in enumerate(zip(rows, ks)):
            if k != t[0]:
                raise ValueError(f"coefficient {i}: index {t[0]!r} is not an integer")
        if len(set(ks)) != len(ks):
            raise ValueError("duplicate coefficient index")
        bound = max((abs(k) for k in ks), default=0)
        pos = np.zeros(bound + 1, dtype=np.complex128)
        neg = np.zeros(bound + 1, dtype=np.complex128)
        c0 = 0.0
        for k, (_, re, im) in zip(ks, rows):
            z = complex(float(re), float(im))
            if not (math.isfinite(z.real) and math.isfinite(z.imag)):
                raise ValueError(f"coefficient c_{k} is not finite")
            if k > 0:
                pos[k] = z
            elif k < 0:
                neg[-k] = z
            else:
                c0 = z
        pos.setflags(write=False)
        neg.setflags(write=False)
        return cls(lambda k: pos[k], lambda k: neg[k], theta0, bound, label, c0)

    @classmethod
    def from_real(cls, seq: SequenceProvider, theta0: float = 0.0) -> "ComplexSequenceProvider":
        """``c_k = a_k`` for ``k >= 1`` and ``c_{-k} = 0``."""
        return cls(lambda k: seq._eval(k).astype(np.complex128), lambda k: np.zeros(k.shape, np.complex128),
                   theta0, seq.limit, f"real({seq.label})")

    @classmethod
    def odd_from_real(cls, seq: SequenceProvider, theta0: float = 0.0) -> "ComplexSequenceProvider":
        """``c_k = a_k / (2i)``, ``c_{-k} = -c_k``: the exponential form of ``sum a_k sin kx``."""
        return cls(lambda k: seq._eval(k) / 2j, lambda k: -(seq._eval(k) / 2j),
                   theta0, seq.limit, f"odd({seq.label})")

    def rotated(self, phi: float) -> "ComplexSequenceProvider":
        """``e^{i phi} c_k`` on both sides."""
        w = complex(math.cos(phi), math.sin(phi))
        return ComplexSequenceProvider(lambda k: w * self._pos(k), lambda k: w * self._neg(k), self.theta0,
                                       self.known_bound, f"rot({phi:g}){self.label}", w * self.c0)

    # -- access -----------------------------------------------------------
    def _check(self, lo: int, hi: int) -> None:
        if lo < 1:
            raise SequenceRangeError(f"{self.label}: |k| = {lo} < 1")
        if self.known_bound is not None and hi > self.known_bound:
            raise SequenceRangeError(f"{self.label}: |k| = {hi} beyond known bound {self.known_bound}")

    def in_range(self, k: int) -> bool:
        return self.known_bound is None or abs(k) <= self.known_bound

    def term(self, k: int) -> complex:
        k = int(k)
        if k == 0:
            return self.c0
        self._check(abs(k), abs(k))
        f = self._pos if k > 0 else self._neg
        return complex(np.asarray(f(np.array([abs(k)], dtype=np.int64)))[0])

    def pos_terms(self, lo: int, hi: int) -> np.ndarray:
        """``[c_lo, ..., c_hi]`` for ``1 <= lo``."""
        return self._block(self._pos, lo, hi)

    def neg_terms(self, lo: int, hi: int) -> np.ndarray:
        """``[c_{-lo}, ..., c_{-hi}]``."""
        return self._block(self._neg, lo, hi)

    def _block(self, f, lo, hi):
        lo, hi = int(lo), int(hi)
        if hi < lo:
            return np.zeros(0, dtype=np.complex128)
        self._check(lo, hi)
        return np.asarray(f(np.arange(lo, hi + 1, dtype=np.int64)), dtype=np.complex128)

    def require_bound(self, stop: Optional[int] = None) -> int:
        if stop is not None:
            if self.known_bound is not None and stop > self.known_bound:
                raise SequenceRangeError(f"{self.label}: stop {stop} beyond known bound {self.known_bound}")
            return int(stop)
        if self.known_bound is None:
            raise SequenceRangeError(f"{self.label}: unbounded sequence needs an explicit stop index")
        return self.known_bound

    def modulus(self) -> LazySequence:
        """The real sequence ``|c_k|``, ``k >= 1``."""
        return LazySequence(lambda k: np.abs(self._pos(k)), f"|{self.label}|", self.known_bound)

    def __repr__(self) -> str:
        return f"ComplexSequenceProvider({self.label!r}, theta0={self.theta0}, known_bound={self.known_bound})"


# ---------------------------------------------------------------------------
# sector conditions

def _in_sector(z: np.ndarray, theta0: float) -> np.ndarray:
    z = np.asarray(z, dtype=np.complex128)
    tol = theta0 + _BOUNDARY_ULPS * math.ulp(theta0)
    return (z == 0) | (np.abs(np.angle(z)) <= tol)


def sector_check(z: complex, theta0: float) -> bool:
    """``True`` iff ``z == 0`` or ``|arg z| <= theta0`` (principal branch, closed boundary).

    The boundary test allows two ulps of ``theta0`` so that ``e^{i theta0}``
    evaluated in floating point is recognised as a boundary point.
    """
    return bool(_in_sector(complex(z), _check_theta(theta0)))


class SectorCheck(NamedTuple):
    ok: bool
    first_violation: Optional[int]
    failing: Optional[str] = None  # "c_n" or "c_n + c_-n"


def cond_d1_check(cseq: ComplexSequenceProvider, n_max: int) -> SectorCheck:
    """Check ``c_n`` and ``c_n + c_{-n}`` lie in ``K(theta0)`` for ``1 <= n <= n_max``."""
    first, which = None, None
    for start in range(1, int(n_max) + 1, _CHUNK):
        stop = min(int(n_max), start + _CHUNK - 1)
        cp = cseq.pos_terms(start, stop)
        bad_c = np.flatnonzero(~_in_sector(cp, cseq.theta0))
        bad_s = np.flatnonzero(~_in_sector(cp + cseq.neg_terms(start, stop), cseq.theta0))
        i_c = int(bad_c[0]) if bad_c.size else None
        i_s = int(bad_s[0]) if bad_s.size else None
        if i_c is None and i_s is None:
            continue
        if i_s is None or (i_c is not None and i_c <= i_s):
            first, which = start + i_c, "c_n"
        else:
            first, which = start + i_s, "c_n + c_-n"
        break
    return SectorCheck(first is None, first, which)


def cond_d2_defect(cseq: ComplexSequenceProvider, n: int, lam: float = 2.0) -> float:
    """Complex analogue of the MVBVS defect, with moduli in the window sum.

    For real nonnegative ``c_k`` and ``c_{-k} = 0`` the arithmetic matches
    :func:`mvbvlab.seqclass.mvbv_defect` operation for operation.
    """
    if not lam >= 2:
        raise ValueError(f"lambda must be >= 2, got {lam}")
    n = int(n)
    lo, hi = mvbv_window(n, lam)
    blo, bhi = min(lo, n), max(hi, 2 * n + 1)
    c = cseq.pos_terms(blo, bhi)
    lhs = float(np.sum(np.abs(np.diff(c[n - blo: 2 * n - blo + 2]))))
    rhs = float(np.sum(np.abs(c[lo - blo: hi - blo + 1]))) / n
    return defect_ratio(lhs, rhs)


def lemma12_ratio(z: complex, theta0: float) -> float:
    """``|z| / Re z`` for nonzero ``z`` in the sector; lies in ``[1, 1/cos theta0]``."""
    z = complex(z)
    if z == 0:
        raise ValueError("z = 0 has no sector ratio")
    if not sector_check(z, theta0):
        raise ValueError(f"z = {z} outside K({theta0})")
    return abs(z) / z.real


def cond_d3_probe(cseq: ComplexSequenceProvider, checkpoints: Iterable[int], stop: Optional[int] = None) -> list:
    """``[(n0, sup_{n0 <= n <= K} n |c_n|)]`` over the positive-index side."""
    K = cseq.require_bound(stop)
    return na_n_probe(cseq.modulus(), checkpoints, K)


class D4Report(NamedTuple):
    partial_sum: float
    blocks: list           # (lo, hi, sum over the dyadic block [2^j, 2^{j+1}))
    tail_max: float        # max block sum over the last three complete blocks
    tail_ratio: float      # last complete block sum / the one before
    divergent: bool


def cond_d4_partial(cseq: ComplexSequenceProvider, n_max: int, halving_ratio: float = 0.75) -> D4Report:
    """Partial sum of ``|c_n + c_{-n}|`` up to ``n_max`` with a dyadic Cauchy-tail diagnostic.

    Summable tails shrink from one dyadic block to the next; the series is
    flagged ``divergent`` when the last complete block sum is at least
    ``halving_ratio`` times the previous one (and nonzero).
    """
    n_max = int(n_max)
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    blocks = []
    lo = 1
    while lo <= n_max:
        hi = min(2 * lo - 1, n_max)
        parts = []
        for start in range(lo, hi + 1, _CHUNK):
            stop = min(hi, start + _CHUNK - 1)
            parts.append(float(np.sum(np.abs(cseq.pos_terms(start, stop) + cseq.neg_terms(start, stop)))))
        blocks.append((lo, hi, math.fsum(parts)))
        lo *= 2
    total = math.fsum(b[2] for b in blocks)
    complete = [b for b in blocks if b[1] == 2 * b[0] - 1]
    tail_max = max((b[2] for b in complete[-3:]), default=0.0)
    if len(complete) >= 2 and complete[-2][2] > 0:
        ratio = complete[-1][2] / complete[-2][2]
    else:
        ratio = 0.0
    divergent = bool(complete) and ratio >= halving_ratio and complete[-1][2] > 0
    return D4Report(total, blocks, tail_max, ratio, bool(divergent))


# ---------------------------------------------------------------------------
# two-sided sums

def _dot(kernel, a: np.ndarray, k0: int, x: float) -> list:
    if not a.any():
        return []
    s, c = kernel(np.ascontiguousarray(a), k0, x, _kernels.RESEED)
    return [s, c]


def _cos_sin_parts(u: np.ndarray, v: np.ndarray, k0: int, x: float):
    """Compensated parts of ``sum u_k cos kx`` and ``sum v_k sin kx`` for complex ``u``, ``v``."""
    return (
        _dot(_kernels.cos_dot, u.real, k0, x), _dot(_kernels.cos_dot, u.imag, k0, x),
        _dot(_kernels.sine_dot, v.real, k0, x), _dot(_kernels.sine_dot, v.imag, k0, x),
    )


def complex_block_sum(cseq: ComplexSequenceProvider, lo: int, hi: int, x: float) -> complex:
    """``sum_{lo <= |k| <= hi} c_k e^{ikx}``.

    Uses ``c_k e^{ikx} + c_{-k} e^{-ikx} = (c_k + c_{-k}) cos kx + i (c_k - c_{-k}) sin kx``.
    """
    x = float(x)
    if not math.isfinite(x):
        raise ValueError("x must be finite")
    lo = max(1, int(lo))
    re, im = [], []
    for start in range(lo, int(hi) + 1, _CHUNK):
        stop = min(int(hi), start + _CHUNK - 1)
        cp, cn = cseq.pos_terms(start, stop), cseq.neg_terms(start, stop)
        ucr, uci, vsr, vsi = _cos_sin_parts(cp + cn, cp - cn, start, x)
        # (u cos) + i (v sin): real = Re u cos - Im v sin, imag = Im u cos + Re v sin
        re.extend(ucr)
        re.extend(-t for t in vsi)
        im.extend(uci)
        im.extend(vsr)
    return complex(math.fsum(re), math.fsum(im))


def complex_partial_sum(cseq: ComplexSequenceProvider, n: int, x: float) -> complex:
    """``S_n(x) = sum_{k=-n}^{n} c_k e^{ikx}``."""
    return cseq.c0 + complex_block_sum(cseq, 1, n, x)


def complex_gap_grid(cseq: ComplexSequenceProvider, n: int, m: int, xs) -> np.ndarray:
    """``S_m(x) - S_n(x)`` at every ``x`` in ``xs`` (complex array)."""
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    if not n < m:
        raise ValueError(f"need n < m, got ({n}, {m})")
    cols = []
    for start in range(n + 1, m + 1, _CHUNK):
        stop = min(m, start + _CHUNK - 1)
        cp, cn = cseq.pos_terms(start, stop), cseq.neg_terms(start, stop)
        u, v = cp + cn, cp - cn
        cr = _kernels.cos_dot_grid(np.ascontiguousarray(u.real), start, xs, _kernels.RESEED)
        ci = _kernels.cos_dot_grid(np.ascontiguousarray(u.imag), start, xs, _kernels.RESEED)
        sr = _kernels.sine_dot_grid(np.ascontiguousarray(v.real), start, xs, _kernels.RESEED)
        si = _kernels.sine_dot_grid(np.ascontiguousarray(v.imag), start, xs, _kernels.RESEED)
        cols.append((np.hstack([cr, -si]), np.hstack([ci, sr])))
    re = np.hstack([c[0] for c in cols])
    im = np.hstack([c[1] for c in cols])
    return np.array([complex(math.fsum(r), math.fsum(i)) for r, i in zip(re, im)])


def lemma14_split(cseq: ComplexSequenceProvider, N: int, M: int, x: float) -> tuple:
    """Split ``sum_{k=N}^{M} (c_k e^{ikx} + c_{-k} e^{-ikx})`` as ``I1 + 2i I2``.

    ``I1 = sum (c_k + c_{-k}) e^{-ikx}`` and ``I2 = sum c_k sin kx``.  The
    identity is exact: ``c_k (e^{-ikx} + 2i sin kx) = c_k e^{ikx}``.
    """
    N, M = max(1, int(N)), int(M)
    x = float(x)
    r1, i1, r2, i2 = [], [], [], []
    for start in range(N, M + 1, _CHUNK):
        stop = min(M, start + _CHUNK - 1)
        cp, cn = cseq.pos_terms(start, stop), cseq.neg_terms(start, stop)
        u = cp + cn
        ucr, uci, usr, usi = _cos_sin_parts(u, u, start, x)
        # u (cos - i sin): real = Re u cos + Im u sin, imag = Im u cos - Re u sin
        r1.extend(ucr)
        r1.extend(usi)
        i1.extend(uci)
        i1.extend(-t for t in usr)
        r2.extend(_dot(_kernels.sine_dot, cp.real, start, x))
        i2.extend(_dot(_kernels.sine_dot, cp.imag, start, x))
    return complex(math.fsum(r1), math.fsum(i1)), complex(math.fsum(r2), math.fsum(i2))


class WindowPhase(NamedTuple):
    x0: float
    lo: int
    hi: int
    lhs: float        # |sum_k c_k (e^{ikx0} - e^{-ikx0})|
    rhs: float        # 2 sum_k Re c_k sin(k x0)
    min_sin: float    # min_k sin(k x0) over the window


def window_phase_probe(cseq: ComplexSequenceProvider, n: int, lam: float) -> WindowPhase:
    """Evaluate the window identity at ``x0 = pi/(2 lam n)`` over ``k in [[n/(2 lam)], [lam n]]``.

    Every ``k x0`` in the window lies in ``(0, pi/2]``, so all ``sin(k x0)``
    are positive; for real nonnegative ``c_k`` the two sides coincide.
    """
    n = int(n)
    x0 = math.pi / (2 * lam * n)
    lo = max(1, math.floor(n / (2 * lam)))
    hi = math.floor(lam * n)
    c = cseq.pos_terms(lo, hi)
    k = np.arange(lo, hi + 1, dtype=np.float64)
    s = np.sin(k * x0)
    lhs = abs(complex(math.fsum(-2 * c.imag * s), math.fsum(2 * c.real * s)))
    rhs = 2 * math.fsum(c.real * s)
    return WindowPhase(x0, lo, hi, lhs, rhs, float(s.min()))


def cond_d2_certify(cseq: ComplexSequenceProvider, window: tuple, lam: float = 2.0,
                    slope_threshold: float = SLOPE_THRESHOLD) -> Certificate:
    """Window certificate for the complex MVBV-type condition (same verdict rules as MVBVS)."""
    n_min, n_max = int(window[0]), int(window[1])
    if n_min < 1 or n_max < n_min:
        raise ValueError(f"invalid window {window}")
    params = ClassParams("MVBVS", lam=lam)
    lo = min(mvbv_window(n_min, lam)[0], n_min)
    hi = max(mvbv_window(n_max, lam)[1], 2 * n_max + 1)
    c = cseq.pos_terms(lo, hi)
    entries = []
    for n in range(n_min, n_max + 1):
        wlo, whi = mvbv_window(n, lam)
        lhs = float(np.sum(np.abs(np.diff(c[n - lo: 2 * n - lo + 2]))))
        rhs = float(np.sum(np.abs(c[wlo - lo: whi - lo + 1]))) / n
        entries.append(DefectEntry(n, lhs, rhs, defect_ratio(lhs, rhs)))
    prof = DefectProfile("MVBVS", params, entries)
    const, slope, verdict = judge_profile(prof, slope_threshold)
    return Certificate("MVBVS", params, (n_min, n_max), const, verdict, slope, prof)
