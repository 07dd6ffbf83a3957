"""Executable class-inclusion diagram: a fixed witness corpus with its expected verdict matrix.

Each witness is certified against every class on a fixed window.  A cell is
``True`` when the certificate is ``member_on_window`` and ``False`` for
``rejected`` or ``inconclusive_growth``.  :func:`relations_table` reports the
observed matrix next to the expected one.

The matrix encodes the chain ``MS < CQMS, RVQMS``, ``MS < RBVS < GBVS``,
``NBVS < MVBVS`` and ``GBVS < MVBVS`` with strict separations:

* the sawtooth leaves MS but stays quasimonotone,
* the dyadic zero-band sequence is MVBVS while failing every other class,
* the growing-band sequence is NBVS but not GBVS,
* the block construction is almost monotone yet not MVBVS.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .generators import Prop3Spec, Thm1Spec, gen_family, gen_prop3, gen_thm1
from .sequences import LazySequence, SequenceProvider
from .seqclass import CLASS_IDS, ClassParams, certify, certify_mvbvs

__all__ = [
    "Witness",
    "WITNESSES",
    "EXPECTED",
    "relations_table",
    "identity_regulator",
    "GBV_NBV_CORPUS",
    "shrunken_mvbv_constants",
]

MATRIX_CLASSES = ("MS", "CQMS", "RVQMS", "RBVS", "GBVS", "NBVS", "MVBVS", "AMS")


def identity_regulator() -> LazySequence:
    """``R(k) = k`` (non-decreasing, ``R(2n)/R(n) = 2``)."""
    return LazySequence(lambda k: np.asarray(k, dtype=np.float64), "R(k)=k")


@dataclass(frozen=True)
class Witness:
    name: str
    build: Callable[[], SequenceProvider]
    window: tuple
    tail_stop: int
    alpha: float = 1.0
    n0_group: int = 2


_PROP3_KMAX = 13
_STOP = 2 ** (_PROP3_KMAX + 1) - 1


def _prop3():
    return gen_prop3(Prop3Spec(gen_family("power_p", p=1.0), k_max=_PROP3_KMAX))


WITNESSES = (
    Witness("power_p(1)", lambda: gen_family("power_p", limit=_STOP, p=1.0), (16, 1024), _STOP),
    Witness("cqms_sawtooth", lambda: gen_family("cqms_sawtooth", limit=_STOP), (16, 1024), _STOP),
    Witness("prop3(1/k)", _prop3, (16, 1024), _STOP),
    Witness("nbvs_bands", lambda: gen_family("nbvs_bands", limit=_STOP, p=1.0), (16, 1024), _STOP),
    Witness("thm1", lambda: gen_thm1(Thm1Spec(j_max=4)), (40, 20000), 10 ** 6),
)

_Y, _N = True, False
EXPECTED = {
    #                  MS  CQMS RVQMS RBVS GBVS NBVS MVBVS AMS
    "power_p(1)":    (_Y, _Y, _Y, _Y, _Y, _Y, _Y, _Y),
    "cqms_sawtooth": (_N, _Y, _Y, _Y, _Y, _Y, _Y, _Y),
    "prop3(1/k)":    (_N, _N, _N, _N, _N, _N, _Y, _N),
    "nbvs_bands":    (_N, _N, _N, _N, _N, _Y, _Y, _N),
    "thm1":          (_N, _N, _N, _N, _N, _N, _N, _Y),
}


def _params(cid: str, w: Witness) -> ClassParams:
    if cid == "CQMS":
        return ClassParams(cid, alpha=w.alpha)
    if cid == "RVQMS":
        return ClassParams(cid, R=identity_regulator())
    if cid == "GBVS":
        return ClassParams(cid, n0_group=w.n0_group)
    return ClassParams(cid)


@dataclass
class RelationCell:
    witness: str
    class_id: str
    expected: bool
    verdict: str
    constant_estimate: float
    growth_slope: float
    params: dict = field(default_factory=dict)

    @property
    def observed(self) -> bool:
        return self.verdict == "member_on_window"

    @property
    def ok(self) -> bool:
        return self.observed == self.expected

    def to_dict(self) -> dict:
        c = self.constant_estimate
        return {"witness": self.witness, "class_id": self.class_id, "expected": self.expected,
                "observed": self.observed, "verdict": self.verdict,
                "constant_estimate": "inf" if math.isinf(c) else c,
                "growth_slope": self.growth_slope, "params": self.params, "ok": self.ok}


def relations_table(witnesses=WITNESSES, expected=EXPECTED, workers: int = 1) -> list:
    """Certify every witness against every class; one :class:`RelationCell` per pair."""
    cells = []
    for w in witnesses:
        seq = w.build()
        for cid, exp in zip(MATRIX_CLASSES, expected[w.name]):
            if cid == "MVBVS":
                cert = certify_mvbvs(seq, w.window, workers=workers)
            else:
                stop = w.tail_stop if cid in ("RBVS", "AMS") else None
                cert = certify(seq, _params(cid, w), w.window, tail_stop=stop, workers=workers)
            cells.append(RelationCell(w.name, cid, exp, cert.verdict, cert.constant_estimate,
                                      cert.growth_slope, cert.params.to_dict()))
    return cells


# ---------------------------------------------------------------------------
# GBVS / NBVS  =>  MVBVS with lambda = 5 on shrunken windows

GBV_NBV_CORPUS = (
    ("power_p(1)", lambda lim: gen_family("power_p", limit=lim, p=1.0)),
    ("power_p(2)", lambda lim: gen_family("power_p", limit=lim, p=2.0)),
    ("power_p(0.5)", lambda lim: gen_family("power_p", limit=lim, p=0.5)),
    ("log_damped", lambda lim: gen_family("log_damped", limit=lim)),
    ("cqms_sawtooth", lambda lim: gen_family("cqms_sawtooth", limit=lim)),
    ("nbvs_bands", lambda lim: gen_family("nbvs_bands", limit=lim, p=1.0)),
)


def shrunken_mvbv_constants(seq: SequenceProvider, w_min: int, w_maxes, lam: float = 5.0) -> list:
    """``sup_{w_min <= n <= W/lam} mvbv_defect(n, lam)`` for each ``W`` in ``w_maxes``.

    Returns rows ``(W, constant, verdict)`` of the certificates on the
    shrunken windows ``[w_min, [W/lam]]``.
    """
    rows = []
    for W in w_maxes:
        cert = certify(seq, ClassParams("MVBVS", lam=lam), (w_min, math.floor(W / lam)))
        rows.append((int(W), cert.constant_estimate, cert.verdict))
    return rows
