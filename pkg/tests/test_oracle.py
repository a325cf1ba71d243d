import numpy as np
import pytest
from hypothesis import given, settings

from edgelab import (ChainSpec, char_fn, interval_contribution, interval_partition,
                     invert_dft, pin_probability, pinned_sum_pmfs, residue_law, sum_pmf)
from edgelab.brute import brute_char_fn, brute_pmf
from edgelab.errors import ImpossiblePin, NodeBudgetExceeded, SupportOverflow
from edgelab.oracle import residues_of_pmf

from conftest import coin, random_spec, specs


def _sup_vs_brute(pmf, ref):
    keys = set(ref) | set(int(k) for k in pmf.support)
    return max(abs(pmf.pmf(k) - ref.get(k, 0.0)) for k in keys)


def test_fair_coin_two_steps():
    pmf = sum_pmf(coin(2))
    assert pmf.offset == 0
    assert np.allclose(pmf.probs, [0.25, 0.5, 0.25], atol=0)


def test_zero_values_give_point_mass():
    spec = ChainSpec.iid([0.3, 0.7], [0, 0], 5)
    pmf = sum_pmf(spec)
    assert pmf.offset == 0 and np.array_equal(pmf.probs, [1.0])
    assert np.array_equal(invert_dft(spec).probs, [1.0])


def test_dp_matches_enumeration_n10(rng):
    spec = random_spec(rng, 10, 3)
    assert _sup_vs_brute(sum_pmf(spec), brute_pmf(spec)) < 1e-13


@settings(max_examples=60, deadline=None)
@given(specs(max_N=7))
def test_dp_and_char_fn_match_enumeration(spec):
    pmf = sum_pmf(spec)
    assert abs(pmf.probs.sum() - 1) < 1e-12
    assert _sup_vs_brute(pmf, brute_pmf(spec)) < 1e-13
    for t in (0.3, 1.0, np.pi):
        assert abs(char_fn(spec, t) - brute_char_fn(spec, t)) < 1e-13


@settings(max_examples=40, deadline=None)
@given(specs(max_N=7))
def test_pinned_dp_matches_enumeration(spec):
    n = spec.N // 2 + 1
    pins = {n: 0}
    assert _sup_vs_brute(sum_pmf(spec, pins), brute_pmf(spec, pins)) < 1e-12
    assert abs(char_fn(spec, 0.7, pins) - brute_char_fn(spec, 0.7, pins)) < 1e-12


def test_char_fn_basic_values():
    assert abs(char_fn(coin(1), np.pi)) < 1e-16
    even = ChainSpec.iid([0.2, 0.5, 0.3], [0, 2, -2], 9)
    assert char_fn(even, np.pi) == pytest.approx(1.0, abs=1e-15)
    spec = random_spec(np.random.default_rng(1), 8, 3)
    pmf = sum_pmf(spec)
    direct = np.exp(1j * pmf.support) @ pmf.probs
    assert abs(char_fn(spec, 1.0) - direct) < 1e-12
    assert char_fn(spec, 0.0) == pytest.approx(1.0, abs=1e-15)


def test_char_fn_array_shape_and_modulus(rng):
    spec = random_spec(rng, 20, 3)
    t = np.linspace(0, 2 * np.pi, 12).reshape(3, 4)
    vals = char_fn(spec, t)
    assert vals.shape == (3, 4)
    assert np.all(np.abs(vals) <= 1 + 1e-14)


def test_dual_route_n50(rng):
    spec = random_spec(rng, 50, 3)
    a, b = sum_pmf(spec), invert_dft(spec)
    ks = np.arange(min(a.offset, b.offset), max(a.support[-1], b.support[-1]) + 1)
    assert np.abs(a.pmf(ks) - b.pmf(ks)).max() < 1e-10


def test_pinned_dft_matches_enumeration(rng):
    spec = random_spec(rng, 10, 2)
    pins = {3: 1, 8: 0}
    pmf = invert_dft(spec, pins)
    assert _sup_vs_brute(pmf, brute_pmf(spec, pins)) < 1e-11


def test_conditional_tower(rng):
    spec = random_spec(rng, 9, 3)
    total = np.zeros(2 * spec.K * spec.N + 1)
    offset = -spec.K * spec.N
    for x in range(3):
        pins = {4: x}
        w = pin_probability(spec, pins)
        pmf = sum_pmf(spec, pins)
        total[pmf.support - offset] += w * pmf.probs
    ref = sum_pmf(spec)
    assert np.abs(total[ref.support - offset] - ref.probs).max() < 1e-11
    assert abs(total.sum() - 1) < 1e-12


def test_pinned_sweep_matches_direct(rng):
    spec = random_spec(rng, 12, 3)
    laws = pinned_sum_pmfs(spec, [(5,), (2, 9)])
    for states, prob, pmf in laws[(2, 9)]:
        pins = {2: states[0], 9: states[1]}
        ref = sum_pmf(spec, pins)
        ks = ref.support
        assert np.abs(pmf.pmf(ks) - ref.probs).max() < 1e-13
    assert sum(p for _, p, _ in laws[(5,)]) == pytest.approx(1.0, abs=1e-13)


def test_impossible_pin_and_overflow():
    spec = ChainSpec([1.0, 0.0], [[[1.0, 0.0], [0.5, 0.5]]] * 2, [[0, 1]] * 3)
    with pytest.raises(ImpossiblePin):
        sum_pmf(spec, {2: 1})
    with pytest.raises(ImpossiblePin):
        char_fn(spec, 0.5, {3: 1})
    with pytest.raises(SupportOverflow):
        sum_pmf(coin(20), cap=10)


def test_full_circle_integral_recovers_pmf(rng):
    spec = random_spec(rng, 30, 3)
    pmf = sum_pmf(spec)
    ks = pmf.support[:: max(1, pmf.support.size // 6)]
    vals = interval_contribution(spec, (0, 2 * np.pi), ks)
    assert np.abs(vals - 2 * np.pi * pmf.pmf(ks)).max() < 1e-8


def test_partition_reassembles(rng):
    spec = random_spec(rng, 40, 3, K=2)
    pmf = sum_pmf(spec)
    ks = np.array([int(round(pmf.mean)) + d for d in (-3, 0, 4)])
    total = sum(interval_contribution(spec, (iv.lo, iv.hi), ks)
                for iv in interval_partition(spec.K, 0.2))
    assert np.abs(total - 2 * np.pi * pmf.pmf(ks)).max() < 1e-8


def test_nonresonant_part_decays(rng):
    from edgelab.lab.scenarios import generate_scenario, preset

    sc = preset("random-elliptic")
    sizes = []
    for N in (200, 400, 800):
        spec = generate_scenario(sc, N)
        k = int(round(sum_pmf(spec).mean))
        parts = [interval_contribution(spec, (iv.lo, iv.hi), k)
                 for iv in interval_partition(spec.K) if iv.point is None]
        sizes.append(max(abs(p) for p in parts))
    # Gaussian-edge mass exp(-V_N delta^2 / 2): faster than geometric in N
    assert sizes[1] < 0.01 * sizes[0]
    assert sizes[2] < 0.01 * sizes[1]
    assert sizes[2] < 1e-6


def test_fixed_node_count_checks():
    spec = random_spec(np.random.default_rng(3), 20, 3)
    with pytest.raises(NodeBudgetExceeded):
        interval_contribution(spec, (0, 2 * np.pi), 0, nodes=16)
    with pytest.raises(NodeBudgetExceeded):
        interval_contribution(spec, (0, 2 * np.pi), 0, max_nodes=32)
    v = interval_contribution(spec, (0, 2 * np.pi), 0, nodes=4000)
    assert abs(v - 2 * np.pi * sum_pmf(spec).pmf(0)) < 1e-10


def test_residue_law_examples():
    law = residue_law(coin(7), 2)
    assert law.tv == pytest.approx(0, abs=1e-15)
    assert abs(law.fourier[1]) < 1e-15
    even = ChainSpec.iid([0.5, 0.5], [0, 2], 5)
    law = residue_law(even, 2)
    assert law.tv == pytest.approx(0.5)
    assert law.fourier[1] == pytest.approx(1.0)


@settings(max_examples=40, deadline=None)
@given(specs(max_N=8))
def test_residue_law_properties(spec):
    for m in range(2, 2 * spec.K + 1):
        law = residue_law(spec, m)
        assert abs(law.masses.sum() - 1) < 1e-12
        assert abs(law.fourier[0] - 1) < 1e-12
        assert np.all(np.abs(law.fourier) <= 1 + 1e-12)
        # Fourier-uniformity sandwich
        others = np.abs(law.fourier[1:])
        assert others.max() <= 2 * law.tv + 1e-12
        assert law.tv <= 0.5 * others.sum() + 1e-12
        for b in range(m):
            assert abs(law.fourier[b] - char_fn(spec, 2 * np.pi * b / m)) < 1e-12
        assert np.abs(residues_of_pmf(sum_pmf(spec), m).masses - law.masses).max() < 1e-12


def test_csv_and_json_layouts(rng):
    spec = random_spec(rng, 4, 2)
    text = sum_pmf(spec).to_csv().splitlines()
    assert text[0] == "k,probability"
    import json

    doc = json.loads(residue_law(spec, 2).to_json())
    assert set(doc) == {"m", "masses", "tv", "fourier_re", "fourier_im"}
