import math

import numpy as np
import pytest

import oracles
from mvbvlab.generators import Thm1Spec, gen_family, gen_thm1
from mvbvlab.sequences import ExplicitSequence
from mvbvlab.sineseries import (VerdictConfig, abel_tail_bound, adversarial_gap, adversarial_probe,
                                convergence_report, dirichlet_bound, dirichlet_sine, gap_grid, lemma9_split,
                                partial_sum, sine_sum, sine_sum_grid, sup_gap, sup_gap_at)


def direct(a: np.ndarray, k0: int, x: float) -> float:
    k = np.arange(k0, k0 + a.size, dtype=np.float64)
    return math.fsum(a * np.sin(k * x))


def test_partial_sum_examples(harmonic):
    zero = gen_family("constant", c=0.0)
    assert partial_sum(zero, 500, 1.3) == 0.0
    assert partial_sum(ExplicitSequence([1.0]), 1, math.pi / 2) == 1.0
    # frozen from the per-term fsum oracle
    assert partial_sum(harmonic, 1000, 1.0) == pytest.approx(1.070694154319584, abs=1e-9)
    assert partial_sum(harmonic, 1000, 1.0) == pytest.approx(oracles.sine_sum(lambda k: 1 / k, 1, 1000, 1.0),
                                                             abs=1e-12)


@pytest.mark.parametrize("x", [0.0, math.pi, -0.1, 4.0])
def test_partial_sum_rejects_x_outside(harmonic, x):
    with pytest.raises(ValueError):
        partial_sum(harmonic, 10, x)


def test_recurrence_fidelity_random_subsamples():
    rng = np.random.default_rng(7)
    for _ in range(10):
        n = int(rng.integers(1, 10 ** 6))
        lo = int(rng.integers(1, n + 1))
        a = rng.random(n - lo + 1)
        x = float(rng.uniform(1e-6, math.pi - 1e-6))
        seq = ExplicitSequence(np.concatenate([np.zeros(lo - 1), a]))
        ref = direct(a, lo, x)
        scale = math.fsum(np.abs(a))
        assert abs(sine_sum(seq, lo, n, x) - ref) <= 1e-8 * max(abs(ref), 1e-3 * scale)


def test_grid_matches_pointwise(harmonic):
    xs = np.array([0.01, 0.5, 2.0, 3.1])
    g = sine_sum_grid(harmonic, 5, 5000, xs)
    for x, v in zip(xs, g):
        assert v == pytest.approx(sine_sum(harmonic, 5, 5000, x), abs=1e-13)


def test_grid_fsum_across_chunks():
    n = (1 << 22) + 1000
    seq = gen_family("power_p", p=1.0, limit=n)
    xs = np.array([0.3, 1.7])
    g = sine_sum_grid(seq, 1, n, xs)
    for x, v in zip(xs, g):
        assert v == pytest.approx(sine_sum(seq, 1, n, x), abs=1e-12)


def test_dirichlet_examples():
    for n in (1, 7, 100):
        assert abs(dirichlet_sine(n, math.pi)) < 1e-13
    assert dirichlet_sine(1, math.pi / 2) == pytest.approx(1.0)
    assert dirichlet_bound(math.pi / 2) == 2.0
    assert dirichlet_sine(5, 0.0) == 0.0


def test_dirichlet_closed_form_vs_direct():
    rng = np.random.default_rng(3)
    for _ in range(200):
        n = int(rng.integers(1, 10 ** 4))
        x = float(rng.uniform(1e-3, math.pi))
        assert dirichlet_sine(n, x) == pytest.approx(oracles.sine_sum(lambda k: 1.0, 1, n, x), abs=1e-10)


def test_abel_tail_bound_examples(harmonic):
    c = ExplicitSequence([0.4] * 300)
    x = 0.7
    b = abel_tail_bound(c, 10, 200, x)
    assert b == pytest.approx((math.pi / x) * 0.8)
    assert abs(sine_sum(c, 10, 200, x)) <= (math.pi / x) * 0.4 <= b
    # monotone: bound telescopes to (pi/x) 2 a_N
    assert abel_tail_bound(harmonic, 10, 200, x) == pytest.approx((math.pi / x) * 2 / 10, rel=1e-13)
    with pytest.raises(ValueError):
        abel_tail_bound(harmonic, 5, 5, x)


def test_lemma9_split(harmonic, inverse_square):
    for seq in (harmonic, inverse_square):
        for n, x in [(3, 0.01), (10, 0.05), (50, 0.001)]:
            N, head, bound = lemma9_split(seq, n, x)
            assert N == math.floor(1 / x)
            assert abs(head) <= bound
    assert lemma9_split(harmonic, 100, 0.5)[1:] == (0.0, 0.0)


def test_gap_grid_contents():
    g = gap_grid(10, 20)
    assert g.min() > 0 and g.max() < math.pi
    assert np.all(np.diff(g) > 0)
    assert np.isclose(g, math.pi / 20).any() and np.isclose(g, math.pi / 40).any()
    big = gap_grid(10 ** 6, 2 * 10 ** 6, max_points=1 << 10)
    assert big.size <= (1 << 10) + 3


def test_sup_gap_examples(inverse_square, harmonic):
    assert sup_gap(gen_family("constant", c=0.0), 10, 20) == 0.0
    for n in (16, 64, 256, 1024):
        assert sup_gap(inverse_square, n, 2 * n) <= 1.0 / n
    # dense-grid oracle: 16 m points, direct per-term evaluation
    for n in (16, 128):
        m = 2 * n
        xs = math.pi * np.arange(1, 16 * m) / (16 * m)
        k = np.arange(n + 1, m + 1, dtype=np.float64)
        dense = np.abs(np.sin(np.outer(xs, k)) @ (1.0 / k)).max()
        g, _, _ = sup_gap_at(harmonic, n, m)
        assert dense >= 0.2 and g >= 0.2
        # the 4m-point grid is a lower estimate of the sup; within 2.5% at n = 16
        assert 0.95 * dense <= g <= dense * (1 + 1e-12)


def test_sup_gap_argument_order(harmonic):
    with pytest.raises(ValueError):
        sup_gap(harmonic, 20, 20)


def test_adversarial_gap_block_construction():
    s = gen_thm1(Thm1Spec(j_max=3))
    g2, g3 = adversarial_gap(s, 2), adversarial_gap(s, 3)
    # frozen from the per-term fsum oracle over [4 n_j, 4 n_{j+1})
    assert g2 == pytest.approx(0.47154662321370583, rel=1e-12)
    assert g3 == pytest.approx(0.6367131261282295, rel=1e-12)
    assert g2 > 0
    assert g3 / math.sqrt(math.log(100)) >= 0.8 * g2 / math.sqrt(math.log(10))
    # the literal S_{n_{j+1}} - S_{n_j} is negative at j = 2 (dominated by the unit head terms)
    assert adversarial_gap(s, 2, mode="literal") < 0
    rows = adversarial_probe(s, [2, 3])
    assert [r["n_j"] for r in rows] == [10, 100]
    assert rows[0]["sqrt_log_scale"] == pytest.approx(math.sqrt(math.log(10)))
    with pytest.raises(ValueError):
        adversarial_gap(s, 4)
    with pytest.raises(ValueError):
        adversarial_gap(gen_family("power_p", p=2.0), 2)


def test_monotone_gaps_shrink(inverse_square):
    gaps = [sup_gap(inverse_square, n, 2 * n) for n in (16, 64, 256, 1024)]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))


def test_convergence_report_examples(inverse_square, harmonic):
    levels = [2 ** i for i in range(4, 13)]
    r = convergence_report(inverse_square, levels)
    assert r.verdict == "uniformly_convergent_evidence"
    assert r.gap_verdict == "uniformly_convergent_evidence"
    r = convergence_report(harmonic, levels)
    assert r.verdict == "divergence_evidence"
    s = gen_thm1(Thm1Spec(j_max=3))
    r = convergence_report(s, [2 ** i for i in range(4, 14)], adversarial_js=[2, 3])
    assert r.verdict == "divergence_evidence" and r.basis == "sup_gap"
    assert not r.mvbvs or r.mvbvs["verdict"] != "member_on_window"
    assert [p[0] for p in r.adversarial_points] == [2, 3]
    d = r.to_dict()
    assert d["config"]["div_threshold"] == VerdictConfig().div_threshold


def test_chaundy_jolliffe_monotone_corpus():
    """For non-increasing witnesses, divergence evidence iff the n a_n profile does not decay."""
    levels = [2 ** i for i in range(4, 13)]
    for name, p in [("power_p", 1.0), ("power_p", 2.0), ("power_p", 0.5), ("log_damped", None)]:
        seq = gen_family(name, p=p, limit=1 << 20) if p is not None else gen_family(name, limit=1 << 20)
        r = convergence_report(seq, levels)
        first, last = r.na_profile[0][1], r.na_profile[-1][1]
        decays = last <= 0.5 * first
        assert (r.verdict == "divergence_evidence") == (not decays), name
