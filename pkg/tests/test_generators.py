import math

import numpy as np
import pytest

import oracles
from mvbvlab.generators import (FAMILIES, Prop3Spec, Thm1Spec, Thm6Spec, block_layout, gen_family, gen_prop3,
                                gen_thm1, gen_thm6)
from mvbvlab.sequences import ExplicitSequence, LazySequence, SequenceRangeError
from mvbvlab.seqclass import ClassParams, ams_profile, certify, gbv_defect, na_n_probe


def M_log(scale=10.0):
    return gen_family("log_ceiling", scale=scale)


# -- block construction with the squaring schedule ---------------------------

def test_thm1_schedule_and_range():
    assert Thm1Spec(j_max=4).schedule() == [1, 10, 100, 10 ** 4, 10 ** 8]
    s = gen_thm1(Thm1Spec(j_max=3))
    assert s.limit == 4 * 10 ** 4 - 1
    with pytest.raises(SequenceRangeError):
        s.term(4 * 10 ** 4)
    with pytest.raises(ValueError):
        Thm1Spec(j_max=1)
    with pytest.raises(ValueError, match="overflow"):
        Thm1Spec(j_max=6)


def test_thm1_terms_frozen():
    s = gen_thm1(Thm1Spec(j_max=3))
    assert s.term(1) == 1.0 and s.term(39) == 1.0
    # 40 starts block (j=2, k=1): block formula wins at the boundary
    assert s.term(40) == pytest.approx(1 / (math.sqrt(math.log(10)) * 40), rel=1e-15)
    # frozen from the scalar oracle
    assert s.term(45) == pytest.approx(0.01464467175516135, rel=1e-15)
    assert s.term(65) == pytest.approx(0.0012673273634274246, rel=1e-15)


def test_thm1_matches_scalar_oracle():
    s = gen_thm1(Thm1Spec(j_max=4))
    rng = np.random.default_rng(1)
    ks = np.concatenate([np.arange(1, 2000), rng.integers(1, s.limit + 1, 500), [399, 400, 39999, 40000]])
    for k in ks:
        assert s.term(int(k)) == pytest.approx(oracles.thm1_term(int(k)), rel=1e-15)


def test_block_layout_fast_path_agrees_with_general_path():
    sched = Thm1Spec(j_max=4).schedule()
    logs = [math.log(n) for n in sched[1:-1]]
    m = np.arange(40_000, 60_000, dtype=np.int64)
    fast = block_layout(m, sched, logs)
    mixed = block_layout(np.concatenate([[5], m]), sched, logs)[1:]
    assert np.array_equal(fast, mixed)


def test_blocks_tile_the_axis():
    for spec in (Thm1Spec(j_max=3), Thm6Spec(M_log(), j_max=3)):
        sched = spec.schedule()
        s = gen_thm1(spec) if isinstance(spec, Thm1Spec) else gen_thm6(spec)
        logs = s.meta["log_scales"]
        for j in range(2, len(sched)):
            nj, nj1 = sched[j - 1], sched[j]
            root = math.sqrt(logs[j - 2])
            # first block of generation j starts at 4 n_j; the last ends at 4 n_{j+1}
            assert s.term(4 * nj) == pytest.approx(1 / (root * 4 * nj), rel=1e-15)
            assert s.term(4 * nj1 - 1) == pytest.approx(1 / (8 * root * (4 * nj1 - 1)), rel=1e-15)
            assert (nj1 // nj) * nj == nj1


def test_thm1_ams_bound_and_na_decay():
    s = gen_thm1(Thm1Spec(j_max=3))
    ns = np.arange(40, s.limit + 1)
    d = ams_profile(s, ns)
    assert d.max() <= 8.0
    # n b_n <= 1/sqrt(log n_j) <= 2/sqrt(log n_j) in block j
    sched = Thm1Spec(j_max=3).schedule()
    for j in (2, 3):
        nj = sched[j - 1]
        m = np.arange(4 * nj, 4 * sched[j], dtype=np.int64)
        assert (m * s.terms(m[0], m[-1])).max() <= 2 / math.sqrt(math.log(nj))


# -- M-driven construction -----------------------------------------------------

def test_thm6_schedule_frozen_M():
    M = gen_family("constant", c=16.0)
    spec = Thm6Spec(M, j_max=3, strict=False)
    assert spec.schedule()[:3] == [1, 10, 80]
    s = gen_thm6(spec)
    assert s.term(1) == 1.0 and s.term(39) == 1.0


def test_thm6_log_ceiling_schedule():
    assert Thm6Spec(M_log(), j_max=4).schedule() == [1, 10, 140, 2800, 61600]


def test_thm6_strict_invariants():
    with pytest.raises(ValueError, match="M_1"):
        Thm6Spec(gen_family("constant", c=5.0))
    dip = LazySequence(lambda k: np.where(k == 20, 10.0, 12.0), "dip")
    with pytest.raises(ValueError, match="decreases at index 19"):
        Thm6Spec(dip)


def test_thm6_na_n_decays():
    s = gen_thm6(Thm6Spec(M_log(), j_max=4))
    prof = [v for _, v in na_n_probe(s, [40, 560, 11200])]
    assert all(b < a for a, b in zip(prof, prof[1:]))


# -- dyadic zero bands ------------------------------------------------------------

def test_prop3_bands():
    s = gen_prop3(Prop3Spec(gen_family("power_p", p=1.0), k_max=6))
    assert [s.term(n) for n in (8, 9, 10)] == [0.0, 0.0, 0.0]
    assert s.term(11) == 1 / 11
    assert [s.term(n) for n in (13, 14, 15)] == [0.0, 0.0, 0.0]
    assert s.term(12) == 1 / 12
    assert s.limit == 127


def test_prop3_rejects_increasing_base():
    with pytest.raises(ValueError, match="increases"):
        Prop3Spec(LazySequence(lambda k: k.astype(float), "k"))
    with pytest.raises(ValueError, match="too short"):
        Prop3Spec(ExplicitSequence([1.0] * 10), k_max=4)


def test_prop3_gbvs_rejected_mvbvs_member():
    s = gen_prop3(Prop3Spec(gen_family("power_p", p=1.0), k_max=12))
    for n0 in range(1, 9):
        assert gbv_defect(s, 2 ** (n0 + 3), n0) == math.inf
    assert certify(s, ClassParams("MVBVS", lam=2), (16, 1024)).member


# -- families ------------------------------------------------------------------------

def test_family_examples():
    assert gen_family("power_p", p=1).term(4) == 0.25
    assert gen_family("log_damped").term(1) == 1.0
    z = gen_family("constant", c=0.0)
    assert not z.terms(1, 100).any()
    saw = gen_family("cqms_sawtooth")
    assert saw.terms(4, 8).tolist() == [0.25, 0.3125, 0.375, 0.4375, 0.125]
    band = gen_family("nbvs_bands")
    assert band.terms(24, 27).tolist() == [0.0, 0.0, 0.0, 1 / 27]
    assert gen_family("log_ceiling", scale=10).terms(1, 6).tolist() == [20, 20, 30, 30, 30, 30]
    with pytest.raises(ValueError):
        gen_family("nope")
    assert set(FAMILIES) >= {"power_p", "log_damped", "constant"}
