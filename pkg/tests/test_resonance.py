import warnings
from math import gcd, log, pi

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from edgelab import (ChainSpec, interval_partition, period, prokhorov_classify, qv_bracket,
                     residue_profile, resonant_points)
from edgelab.errors import DegenerateVariance, DeltaTooLarge
from edgelab.lab.scenarios import generate_scenario, preset
from edgelab.resonance import ResonantPoint, minimal_gap, mode_and_second

from conftest import coin, random_spec, specs


def test_points_k1_and_k2():
    assert [p.t for p in resonant_points(1)] == [0.0, pi]
    ts = [p.t for p in resonant_points(2)]
    assert np.allclose(ts, [0, pi / 2, 2 * pi / 3, pi, 4 * pi / 3, 3 * pi / 2])


def test_point_count_k3_matches_brute_set():
    brute = {round(2 * pi * l / m, 12) for m in range(1, 7) for l in range(m)}
    assert len(resonant_points(3)) == len(brute)
    assert all(gcd(p.l, p.m) == 1 for p in resonant_points(3))


def test_k0_warns():
    with pytest.warns(UserWarning):
        assert resonant_points(0) == [ResonantPoint(0, 1)]


def test_period_and_slots():
    assert period(1) == 2 and period(2) == 12 and period(3) == 60
    J = period(2)
    for p in resonant_points(2):
        a = p.slot(J)
        k = np.arange(-7, 8)
        assert np.allclose(np.exp(-1j * p.t * k), np.exp(2j * pi * a * k / J))


def test_fair_coin_profile():
    prof = residue_profile(coin(40), 2)
    assert np.allclose(prof.q, 0.5)
    assert prof.M == pytest.approx(20.0)


def test_even_profile_is_zero():
    spec = ChainSpec.iid([0.3, 0.7], [0, 2], 30)
    assert residue_profile(spec, 2).M == 0.0


def test_ties_break_to_smallest():
    assert mode_and_second(np.array([0.4, 0.4, 0.2]))[0] == 0
    assert mode_and_second(np.array([0.2, 0.4, 0.4]))[0] == 1


def test_fair_coin_drop_arithmetic():
    rep = prokhorov_classify(coin(1000), R=10)
    assert rep.variance == pytest.approx(250.0)
    assert rep.threshold == pytest.approx(10 * log(250))
    assert rep.rows[0]["second"] == pytest.approx(500.0)
    assert rep.dropped() == {2}


def test_even_chain_keeps():
    spec = ChainSpec.homogeneous([0.5, 0.5], [[0.6, 0.4], [0.3, 0.7]], [0, 2], 200)
    rep = prokhorov_classify(spec, R=10)
    assert rep.rows[0]["m"] == 2 and rep.rows[0]["verdict"] == "keep"


def test_degenerate_variance():
    with pytest.raises(DegenerateVariance):
        prokhorov_classify(coin(3), R=10)


def test_sparse_odd_harmonic_sum():
    spec = generate_scenario(preset("sparse-odd-0.5"), 1000)
    M = residue_profile(spec, 2).M
    assert abs(M - 0.5 * log(1000)) <= 0.1 * 0.5 * log(1000)


def test_sparse_odd_verdict_flips_with_c():
    sc = preset("sparse-odd-0.5")
    spec_small = generate_scenario(sc.with_(params={"c": 0.5}), 2000)
    spec_big = generate_scenario(sc.with_(params={"c": 40.0}), 2000)
    R = 2.0
    assert prokhorov_classify(spec_small, R).rows[0]["verdict"] == "keep"
    assert prokhorov_classify(spec_big, R).rows[0]["verdict"] == "drop"


@settings(max_examples=60, deadline=None)
@given(specs(max_N=10, max_states=4, max_K=3))
def test_qv_bracket_exact(spec):
    for m in range(2, 2 * spec.K + 1):
        prof = residue_profile(spec, m)
        for n, dist in enumerate(prof.dists):
            # shift the residues so the mode sits in the middle of the window
            shifted = np.roll(dist, m // 2 - prof.modes[n])
            lo, var, hi = qv_bracket(shifted, spec.K)
            assert lo <= var + 1e-12
            assert var <= hi + 1e-12
        assert np.all(prof.q <= 0.5 + 1e-15)
        assert np.allclose(prof.dists.sum(axis=1), 1)


def test_conditional_q_stable_over_pins(rng):
    spec = random_spec(rng, 30, 3, eps0=0.3)
    base = residue_profile(spec, 2).q
    ratios = []
    for _ in range(15):
        steps = rng.choice(np.arange(1, 31), 2, replace=False)
        pins = {int(n): int(rng.integers(3)) for n in steps}
        q = residue_profile(spec, 2, pins).q
        free = [n - 1 for n in range(1, 31) if n not in pins and base[n - 1] > 0]
        ratios.extend((q[free] / base[free]).tolist())
    ratios = np.array(ratios)
    A = max(ratios.max(), 1 / ratios[ratios > 0].min())
    assert A < 50


@settings(max_examples=30, deadline=None)
@given(specs(max_N=12))
def test_totals_nondecreasing_in_n(spec):
    prof = residue_profile(spec, 2)
    assert np.all(np.diff(prof.cumulative()) >= 0)


def test_partition_examples():
    parts = interval_partition(1, 0.5)
    res = [iv for iv in parts if iv.resonant]
    assert [iv.point.t for iv in res] == [0.0, pi]
    parts = interval_partition(2, 0.2)
    res = [iv for iv in parts if iv.resonant]
    assert len(res) == 6
    for iv in res:
        assert iv.lo < iv.point.t < iv.hi
    with pytest.raises(DeltaTooLarge):
        interval_partition(2, minimal_gap(2))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.floats(0.05, 0.45))
def test_partition_covers_circle(K, frac):
    delta = frac * minimal_gap(K)
    parts = interval_partition(K, delta)
    assert parts[0].lo == pytest.approx(-delta)
    assert parts[-1].hi == pytest.approx(2 * pi - delta)
    for a, b in zip(parts, parts[1:]):
        assert a.hi == pytest.approx(b.lo)
        assert a.lo < a.hi
    assert sum(iv.resonant for iv in parts) == len(resonant_points(K))


def test_profile_csv():
    text = residue_profile(coin(3), 2).to_csv().splitlines()
    assert text[0] == "n,m,m_n,q_n"
    assert len(text) == 4
