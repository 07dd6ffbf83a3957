"""Sine-series partial sums, kernel bounds and uniform-convergence probes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from typing import Iterable, Optional, Sequence

import numpy as np

from . import _kernels
from .sequences import SequenceProvider, SequenceRangeError
from .seqclass import ClassParams, certify, na_n_probe, variation, DEFAULT_LAMBDAS

__all__ = [
    "VerdictConfig",
    "SeriesProbe",
    "sine_sum",
    "sine_sum_grid",
    "partial_sum",
    "dirichlet_sine",
    "dirichlet_bound",
    "abel_tail_bound",
    "lemma9_split",
    "gap_grid",
    "sup_gap",
    "sup_gap_at",
    "adversarial_gap",
    "adversarial_probe",
    "convergence_report",
]

_CHUNK = 1 << 22
MAX_GRID = 1 << 16


def _check_x(x: float) -> float:
    x = float(x)
    if not 0.0 < x < math.pi:
        raise ValueError(f"x = {x!r} outside (0, pi)")
    return x


def sine_sum(seq: SequenceProvider, lo: int, hi: int, x: float) -> float:
    """``sum_{k=lo}^{hi} a_k sin(kx)`` via the reseeded recurrence."""
    x = _check_x(x)
    lo = max(1, int(lo))
    if hi < lo:
        return 0.0
    parts = []
    for start in range(lo, hi + 1, _CHUNK):
        stop = min(hi, start + _CHUNK - 1)
        s, c = _kernels.sine_dot(seq.terms(start, stop), start, x, _kernels.RESEED)
        parts.extend((s, c))
    return math.fsum(parts)


def sine_sum_grid(seq: SequenceProvider, lo: int, hi: int, xs) -> np.ndarray:
    """``sine_sum`` at every point of ``xs`` (evaluated in parallel over x)."""
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    if xs.size and (xs.min() <= 0 or xs.max() >= math.pi):
        raise ValueError("grid points must lie in (0, pi)")
    lo = max(1, int(lo))
    if hi < lo:
        return np.zeros(xs.size)
    chunks = []
    for start in range(lo, hi + 1, _CHUNK):
        stop = min(hi, start + _CHUNK - 1)
        chunks.append(_kernels.sine_dot_grid(seq.terms(start, stop), start, xs, _kernels.RESEED))
    if len(chunks) == 1:
        return chunks[0][:, 0] + chunks[0][:, 1]
    stacked = np.concatenate(chunks, axis=1)
    return np.array([math.fsum(row) for row in stacked])


def partial_sum(seq: SequenceProvider, n: int, x: float) -> float:
    """``S_n(x) = sum_{k=1}^{n} a_k sin(kx)`` for ``x`` in ``(0, pi)``."""
    return sine_sum(seq, 1, n, x)


def dirichlet_sine(n: int, x: float) -> float:
    """Conjugate Dirichlet kernel ``sum_{k=1}^{n} sin(kx)`` in closed form."""
    half = math.sin(0.5 * x)
    if half == 0.0:
        return 0.0
    return math.sin(0.5 * n * x) * math.sin(0.5 * (n + 1) * x) / half


def dirichlet_bound(x: float) -> float:
    return math.pi / x


def abel_tail_bound(seq: SequenceProvider, N: int, M: int, x: float) -> float:
    """Summation-by-parts majorant of ``|sum_{k=N}^{M} a_k sin(kx)|``.

    Writing ``sin(kx) = D_k - D_{k-1}`` gives
    ``sum = sum_{k=N}^{M-1} Δa_k D_k + a_M D_M - a_N D_{N-1}``; bounding every
    kernel by ``pi/x`` yields ``(pi/x) (sum |Δa_k| + a_N + a_M)``.
    """
    if N >= M:
        raise ValueError(f"need N < M, got N={N}, M={M}")
    x = _check_x(x)
    return dirichlet_bound(x) * (variation(seq, N, M - 1) + seq.term(N) + seq.term(M))


def lemma9_split(seq: SequenceProvider, n: int, x: float) -> tuple:
    """Head of the tail split at ``N = [1/x]``.

    Returns ``(N, I1, bound)`` with ``I1 = sum_{k=n}^{N-1} a_k sin(kx)`` and
    ``bound = x sum_{k=n}^{N-1} k a_k``, which dominates ``|I1|`` since
    ``|sin(kx)| <= kx``.  When ``N <= n`` the head is empty.
    """
    x = _check_x(x)
    N = math.floor(1.0 / x)
    if N <= n:
        return N, 0.0, 0.0
    a = seq.terms(n, N - 1)
    k = np.arange(n, N, dtype=np.float64)
    head = sine_sum(seq, n, N - 1, x)
    return N, head, x * math.fsum(k * a)


def gap_grid(n: int, m: int, max_points: int = MAX_GRID, extra: Iterable[float] = ()) -> np.ndarray:
    """Probe grid for ``sup_x |S_m(x) - S_n(x)|``.

    ``{pi i / (4m) : 1 <= i < 4m}`` thinned by a uniform stride to at most
    ``max_points`` points, plus ``pi/(2n)``, ``pi/(4n)``, ``pi/(2m)`` and any
    ``extra`` points inside ``(0, pi)``.  Sorted, duplicates removed.
    """
    count = 4 * m - 1
    stride = max(1, -(-count // max_points))
    i = np.arange(1, 4 * m, stride, dtype=np.float64)
    pts = [math.pi * i / (4 * m)]
    special = [math.pi / (2 * n), math.pi / (4 * n), math.pi / (2 * m)]
    special.extend(float(e) for e in extra)
    pts.append(np.array([p for p in special if 0 < p < math.pi]))
    return np.unique(np.concatenate(pts))


def _schedule_points(seq: SequenceProvider) -> list:
    sched = getattr(seq, "meta", {}).get("schedule")
    if not sched:
        return []
    return [math.pi / (2 * nj) for nj in sched if nj >= 1]


def sup_gap_at(seq: SequenceProvider, n: int, m: int, grid=None, max_points: int = MAX_GRID) -> tuple:
    """``(sup gap, argmax x, grid size)`` for the pair ``(n, m)``."""
    if not n < m:
        raise ValueError(f"need n < m, got ({n}, {m})")
    if grid is None:
        grid = gap_grid(n, m, max_points, _schedule_points(seq))
    vals = np.abs(sine_sum_grid(seq, n + 1, m, grid))
    i = int(np.argmax(vals))
    return float(vals[i]), float(grid[i]), int(len(grid))


def sup_gap(seq: SequenceProvider, n: int, m: int, grid=None, max_points: int = MAX_GRID) -> float:
    """``max over grid of |S_m(x) - S_n(x)|``."""
    return sup_gap_at(seq, n, m, grid, max_points)[0]


def _schedule(seq: SequenceProvider) -> list:
    sched = getattr(seq, "meta", {}).get("schedule")
    if not sched:
        raise ValueError(f"{seq.label} has no block schedule")
    return sched


def adversarial_gap(seq: SequenceProvider, j: int, mode: str = "blocks") -> float:
    """Partial-sum gap of a block-construction sequence at ``t_j = pi/(2 n_j)``.

    ``mode="blocks"`` sums generation ``j`` exactly, i.e. indices
    ``[4 n_j, 4 n_{j+1})``; ``mode="literal"`` returns
    ``S_{n_{j+1}}(t_j) - S_{n_j}(t_j)``.
    """
    sched = _schedule(seq)
    if not 2 <= j <= len(sched) - 1:
        raise ValueError(f"generation {j} not available (schedule has {len(sched)} entries)")
    nj, nj1 = sched[j - 1], sched[j]
    t = math.pi / (2 * nj)
    if mode == "blocks":
        lo, hi = 4 * nj, 4 * nj1 - 1
    elif mode == "literal":
        lo, hi = nj + 1, nj1
    else:
        raise ValueError(f"unknown mode {mode!r}")
    if not seq.in_range(hi):
        raise SequenceRangeError(f"{seq.label}: generation {j} needs index {hi}")
    return sine_sum(seq, lo, hi, t)


def adversarial_probe(seq: SequenceProvider, js: Iterable[int], mode: str = "blocks") -> list:
    """Rows ``{j, n_j, t_j, gap, sqrt_log_scale}`` for each generation in ``js``."""
    sched = _schedule(seq)
    logs = seq.meta.get("log_scales")
    rows = []
    for j in js:
        gap = adversarial_gap(seq, j, mode)
        root = math.sqrt(logs[j - 2]) if logs else math.sqrt(math.log(sched[j - 1]))
        rows.append({"j": j, "n_j": sched[j - 1], "t_j": math.pi / (2 * sched[j - 1]),
                     "gap": gap, "sqrt_log_scale": root})
    return rows


# ---------------------------------------------------------------------------
# convergence report

@dataclass
class VerdictConfig:
    """Heuristic thresholds for :func:`convergence_report`.

    ``div_threshold``/``conv_threshold`` act on the sup-gaps of the three
    largest levels.  ``na_decay_ratio``/``na_flat_ratio`` act on the ratio of
    the last to the first tail sup of ``n a_n`` and are used when the
    sequence is certified MVBVS on the window.
    """

    div_threshold: float = 0.05
    conv_threshold: float = 0.005
    na_decay_ratio: float = 0.5
    na_flat_ratio: float = 0.9
    max_points: int = MAX_GRID


@dataclass
class SeriesProbe:
    label: str
    pairs: list
    gaps: list
    argmax_x: list
    grid_points: list
    na_profile: list
    adversarial_points: list = field(default_factory=list)
    mvbvs: dict = field(default_factory=dict)
    gap_verdict: str = "inconclusive"
    verdict: str = "inconclusive"
    basis: str = "sup_gap"
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _gap_verdict(gaps: Sequence[float], cfg: VerdictConfig) -> str:
    if len(gaps) < 3:
        return "inconclusive"
    top = list(gaps[-3:])
    if all(g > cfg.div_threshold for g in top):
        return "divergence_evidence"
    if all(b <= a for a, b in zip(top, top[1:])) and top[-1] < cfg.conv_threshold:
        return "uniformly_convergent_evidence"
    return "inconclusive"


def _na_verdict(profile: list, cfg: VerdictConfig) -> str:
    first, last = profile[0][1], profile[-1][1]
    if first == 0:
        return "uniformly_convergent_evidence"
    ratio = last / first
    if ratio <= cfg.na_decay_ratio:
        return "uniformly_convergent_evidence"
    if ratio >= cfg.na_flat_ratio:
        return "divergence_evidence"
    return "inconclusive"


def convergence_report(seq: SequenceProvider, levels: Sequence[int], config: Optional[VerdictConfig] = None,
                       lambdas: Sequence[float] = DEFAULT_LAMBDAS, adversarial_js: Iterable[int] = ()) -> SeriesProbe:
    """Assemble sup-gaps over ``(n, 2n)``, the ``n a_n`` tail profile and an MVBVS certificate.

    Verdict logic: when the sequence is certified MVBVS on
    ``[min(levels), max(levels)]``, the decision follows the ``n a_n``
    profile (uniform convergence is then equivalent to ``n a_n -> 0``); the
    sup-gap thresholds decide otherwise.  Both partial verdicts are kept.
    """
    cfg = config or VerdictConfig()
    levels = sorted(int(n) for n in levels)
    if len(levels) < 1:
        raise ValueError("need at least one level")
    pairs, gaps, args, sizes = [], [], [], []
    for n in levels:
        g, x, size = sup_gap_at(seq, n, 2 * n, max_points=cfg.max_points)
        pairs.append((n, 2 * n))
        gaps.append(g)
        args.append(x)
        sizes.append(size)
    profile = na_n_probe(seq, levels, stop=2 * levels[-1])

    window = (levels[0], levels[-1])
    cert = None
    for lam in lambdas:
        if not seq.in_range(max(math.floor(lam * window[1]), 2 * window[1] + 1)):
            continue
        cert = certify(seq, ClassParams("MVBVS", lam=lam), window)
        if cert.member:
            break
    mv = {}
    if cert is not None:
        mv = {"lambda": cert.params.lam, "verdict": cert.verdict,
              "constant_estimate": cert.constant_estimate, "growth_slope": cert.growth_slope}

    gap_v = _gap_verdict(gaps, cfg)
    if cert is not None and cert.member:
        verdict, basis = _na_verdict(profile, cfg), "mvbvs_na_n"
    else:
        verdict, basis = gap_v, "sup_gap"

    js = list(adversarial_js)
    adv = [(r["j"], r["t_j"], r["gap"]) for r in adversarial_probe(seq, js)] if js else []

    return SeriesProbe(seq.label, pairs, gaps, args, sizes, profile, adv, mv, gap_v, verdict, basis,
                       asdict(cfg))
