"""Randomised checks of the exact inequalities and invariances."""

import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from mvbvlab.complexseries import (ComplexSequenceProvider, complex_partial_sum, cond_d2_defect, lemma12_ratio,
                                   lemma14_split)
from mvbvlab.sequences import ExplicitSequence, ScaledSequence
from mvbvlab.seqclass import (ClassParams, ams_defect, certify, gbv_defect, mvbv_defect, nbv_defect, rbv_defect)
from mvbvlab.sineseries import abel_tail_bound, dirichlet_bound, dirichlet_sine, lemma9_split, sine_sum

SETTINGS = settings(max_examples=60, deadline=None)

terms = arrays(np.float64, st.integers(40, 300), elements=st.floats(0, 10, allow_nan=False, width=64))
x_open = st.floats(1e-6, math.pi - 1e-6)


def defects(seq, n):
    return (mvbv_defect(seq, n, 2), gbv_defect(seq, n, 3), nbv_defect(seq, n), rbv_defect(seq, n),
            ams_defect(seq, n))


@SETTINGS
@given(terms, st.integers(0, 30), st.sampled_from([1.0, 2.0 ** -20, 2.0 ** 20, 0.5]))
def test_defects_exactly_scale_invariant_binary_scales(a, e, s):
    seq = ExplicitSequence(a)
    n = 1 + e % (len(a) // 2 - 2)
    assert defects(seq, n) == defects(ScaledSequence(seq, s), n)


@SETTINGS
@given(terms, st.integers(0, 30), st.sampled_from([1e-6, 1e6, 3.7]))
def test_defects_scale_invariant_to_rounding(a, e, s):
    # fl(s a_k) differs from s a_k by half an ulp, so only near-equality can hold
    seq = ExplicitSequence(a)
    n = 1 + e % (len(a) // 2 - 2)
    for d0, d1 in zip(defects(seq, n), defects(ScaledSequence(seq, s), n)):
        assert d1 == pytest.approx(d0, rel=1e-12) or d0 == d1


@SETTINGS
@given(terms, st.integers(1, 60))
def test_monotone_baseline(a, n):
    seq = ExplicitSequence(np.sort(a)[::-1] + 1e-3)
    n = min(n, len(a) // 2 - 1)
    slack = 1 + 8 * np.finfo(float).eps
    assert rbv_defect(seq, n) <= slack
    assert ams_defect(seq, n) == 1.0
    assert gbv_defect(seq, n, 1) <= slack


@SETTINGS
@given(st.integers(1, 10 ** 4), x_open)
def test_dirichlet_bound(n, x):
    assert abs(dirichlet_sine(n, x)) <= dirichlet_bound(x)


@SETTINGS
@given(terms, st.data(), x_open)
def test_abel_bound_dominates(a, data, x):
    seq = ExplicitSequence(a)
    N = data.draw(st.integers(1, len(a) - 2))
    M = data.draw(st.integers(N + 1, len(a) - 1))
    brute = oracles.sine_sum(lambda k: float(a[k - 1]), N, M, x)
    assert abs(brute) <= abel_tail_bound(seq, N, M, x)
    assert abs(sine_sum(seq, N, M, x)) <= abel_tail_bound(seq, N, M, x)


@SETTINGS
@given(arrays(np.float64, 3000, elements=st.floats(0, 1, width=64)), st.integers(1, 50), st.floats(1e-3, 0.5))
def test_lemma9_head_bound(a, n, x):
    seq = ExplicitSequence(a)
    N, head, bound = lemma9_split(seq, n, x)
    assert abs(head) <= bound


@settings(max_examples=200, deadline=None)
@given(st.sampled_from([0.0, math.pi / 6, math.pi / 4, 0.49 * math.pi]), st.floats(0, 1), st.floats(1e-3, 1e3))
def test_lemma12_ratio_bounds(theta0, u, r):
    z = cmath.rect(r, (2 * u - 1) * theta0)
    q = lemma12_ratio(z, theta0)
    assert 1.0 <= q <= 1 / math.cos(theta0) + 1e-12


complex_terms = st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), min_size=2, max_size=80)


@SETTINGS
@given(complex_terms, complex_terms, st.floats(-math.pi, math.pi))
def test_lemma14_split_reconstructs(pos, neg, x):
    n = min(len(pos), len(neg))
    trip = [[k, *pos[k - 1]] for k in range(1, n + 1)] + [[-k, *neg[k - 1]] for k in range(1, n + 1)]
    c = ComplexSequenceProvider.from_triples(trip)
    I1, I2 = lemma14_split(c, 1, n, x)
    ref = oracles.two_sided_sum(c.term, 1, n, x)
    scale = math.fsum(abs(c.term(k)) + abs(c.term(-k)) for k in range(1, n + 1))
    assert abs(I1 + 2j * I2 - ref) <= 1e-12 * max(abs(ref), 1e-3 * scale, 1e-300)


@SETTINGS
@given(terms, st.integers(1, 40), x_open)
def test_real_complex_reduction(a, n, x):
    seq = ExplicitSequence(a)
    c = ComplexSequenceProvider.from_real(seq)
    n = min(n, len(a) // 2 - 1)
    assert cond_d2_defect(c, n, 2) == mvbv_defect(seq, n, 2)
    assert complex_partial_sum(c, len(a), x).imag == pytest.approx(sine_sum(seq, 1, len(a), x), abs=1e-12)


@settings(max_examples=20, deadline=None)
@given(terms)
def test_certification_deterministic(a):
    seq = ExplicitSequence(a)
    p = ClassParams("NBVS")
    assert certify(seq, p, (1, 19)).to_dict() == certify(seq, p, (1, 19), workers=3).to_dict()
