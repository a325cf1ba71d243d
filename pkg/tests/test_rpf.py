import json

import numpy as np
import pytest
from hypothesis import given, settings

from edgelab import ChainSpec, char_fn, rpf_triplets, transfer_apply, transfer_dual, verify_rpf
from edgelab.brute import all_paths, path_sums
from edgelab.errors import NoContraction, StepOutOfRange
from edgelab.lab.scenarios import generate_scenario, preset

from conftest import random_spec, specs


def test_stochasticity():
    spec = random_spec(np.random.default_rng(2), 10, 3)
    for j in range(1, 10):
        assert np.allclose(transfer_apply(spec, j, 0, None, np.ones(3)), 1.0, atol=1e-15)
    with pytest.raises(StepOutOfRange):
        transfer_apply(spec, 10, 0, None, np.ones(3))


def test_single_state_is_scalar():
    spec = ChainSpec.iid([1.0], [2], 5)
    out = transfer_apply(spec, 2, 0.1 + 0.2j, None, np.array([3.0]))
    assert out[0] == pytest.approx(3 * np.exp((0.1 + 0.2j) * 2))


def test_telescoping_gives_char_fn():
    spec = random_spec(np.random.default_rng(8), 12, 3)
    t = 0.8
    g = np.ones(3, complex)
    for j in range(11, 0, -1):
        g = transfer_apply(spec, j, 1j * t, None, g)
    total = (spec.initial * np.exp(1j * t * spec.value(1))) @ g
    assert abs(total - char_fn(spec, t)) < 1e-14


def test_unperturbed_triplets_exact():
    spec = random_spec(np.random.default_rng(1), 60, 3)
    seq = rpf_triplets(spec, 0.0)
    assert np.abs(seq.lams - 1).max() < 1e-14
    assert max(np.abs(h - 1).max() for h in seq.hs) < 1e-14


@settings(max_examples=25, deadline=None)
@given(specs(max_N=8))
def test_lambda_products_match_enumeration(spec):
    if spec.N < 2:
        return
    z = 0.03 + 0.04j
    seq = rpf_triplets(spec, z, check=False)
    paths, prob = all_paths(spec)
    total = np.exp(z * path_sums(spec, paths)) @ prob
    first = (spec.initial * np.exp(z * spec.value(1))) @ seq.hs[0]
    assert abs(np.prod(seq.lams) * first - total) < 1e-10 * max(1, abs(total))


def test_real_z_positivity():
    spec = generate_scenario(preset("random-elliptic"), 200)
    seq = rpf_triplets(spec, 0.05)
    assert min(h.real.min() for h in seq.hs) > 0
    assert max(np.abs(h.imag).max() for h in seq.hs) < 1e-14
    lam = seq.lams.real
    assert 0 < lam.min() <= lam.max() < np.inf


@pytest.mark.parametrize("z", [0.0, 0.05, 0.02j, -0.05j, 0.035 + 0.035j])
def test_residuals_and_decay(z):
    spec = generate_scenario(preset("random-elliptic"), 200)
    seq = rpf_triplets(spec, z)
    chk = verify_rpf(spec, seq)
    assert chk.max_primal < 1e-10 and chk.max_dual < 1e-10
    assert chk.normalization.max() < 1e-10
    assert chk.decay_ratio < 0.9


def test_eigenvector_test_function_is_fixed_point():
    from edgelab.rpf import product_deviation

    spec = generate_scenario(preset("random-elliptic"), 100)
    seq = rpf_triplets(spec, 0.03j)
    j = 40
    dev = product_deviation(spec, seq, j, lambda n: seq.hs[n - 1], 5)
    assert dev.max() < 1e-12


def test_analyticity_proxy():
    spec = generate_scenario(preset("random-elliptic"), 120)
    zs = np.linspace(-0.05, 0.05, 11)
    lam = np.array([rpf_triplets(spec, z).lams[60] for z in zs])
    for part in (lam.real,):
        fit = np.polynomial.polynomial.polyfit(zs, part, 4)
        assert np.abs(np.polynomial.polynomial.polyval(zs, fit) - part).max() < 1e-8


def test_uniform_bounds_over_grid():
    spec = generate_scenario(preset("random-elliptic"), 150)
    bounds = []
    for z in (0, 0.05, -0.05, 0.05j, -0.05j):
        seq = rpf_triplets(spec, z)
        bounds.append(max(np.abs(seq.lams).max(), max(np.abs(h).max() for h in seq.hs),
                          max(np.abs(seq.nu_measure(spec, j)).sum() for j in range(1, 151))))
    assert max(bounds) < 2.0


def test_large_z_is_flagged():
    spec = generate_scenario(preset("random-elliptic"), 200)
    seq = rpf_triplets(spec, 3.0j, check=False)
    if seq.seed_discrepancy >= 1e-8:
        with pytest.raises(NoContraction) as exc:
            rpf_triplets(spec, 3.0j)
        assert exc.value.residual == seq.seed_discrepancy


def test_serialization():
    spec = random_spec(np.random.default_rng(0), 6, 2)
    seq = rpf_triplets(spec, 0.01, check=False)
    doc = json.loads(seq.to_json())
    assert len(doc["triplets"]) == 5
    csv = verify_rpf(spec, seq).to_csv().splitlines()
    assert csv[0] == "j,primal_residual,dual_residual"
