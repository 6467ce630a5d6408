import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from corrmac.source import CorrelationModel, generate_block, joint_pmf

L_BIG = 10**6


def test_rho_one_copies_common_bit():
    bits = generate_block(CorrelationModel(3, 1.0), 1000, seed=4).bits
    assert np.all(bits == bits[0])


@pytest.mark.parametrize("rho, agree", [(0.5, 0.5), (0.95, 0.95**2 + 0.05**2)])
def test_pairwise_agreement(rho, agree):
    bits = generate_block(CorrelationModel(2, rho), L_BIG, seed=1).bits
    emp = np.mean(bits[0] == bits[1])
    sigma = math.sqrt(agree * (1 - agree) / L_BIG)
    assert abs(emp - agree) < 3 * sigma


def test_agreement_closed_form_by_enumeration():
    rho = 0.95
    total = 0.0
    for b, z1, z2 in itertools.product((0, 1), repeat=3):
        p = 0.5 * (rho if z1 == 0 else 1 - rho) * (rho if z2 == 0 else 1 - rho)
        total += p * ((b ^ z1) == (b ^ z2))
    assert total == pytest.approx(0.9050, abs=1e-12)


def test_seeded_and_validated():
    m = CorrelationModel(4, 0.9)
    assert np.array_equal(generate_block(m, 50, 9).bits, generate_block(m, 50, 9).bits)
    assert generate_block(m, 50, 9).bits.shape == (4, 50)
    with pytest.raises(ValueError):
        generate_block(m, 0, 1)
    for bad in [(0, 0.9), (2, 0.4), (2, 1.01)]:
        with pytest.raises(ValueError):
            CorrelationModel(*bad)


def test_pmf_examples():
    assert joint_pmf(CorrelationModel(2, 0.95), [0, 0]) == pytest.approx(0.4525, abs=1e-15)
    for n in (1, 3, 7):
        for x in itertools.product((0, 1), repeat=n):
            assert joint_pmf(CorrelationModel(n, 0.5), x) == pytest.approx(2.0**-n, rel=1e-12)


@pytest.mark.parametrize("rho", [0.5, 0.9, 0.95, 0.99])
def test_pmf_normalises(rho):
    for n in range(1, 13):
        m = CorrelationModel(n, rho)
        total = sum(joint_pmf(m, x) for x in itertools.product((0, 1), repeat=n))
        assert abs(total - 1.0) < 1e-12


def test_pmf_rejects_bad_vectors():
    m = CorrelationModel(3, 0.9)
    with pytest.raises(ValueError):
        joint_pmf(m, [0, 1])
    with pytest.raises(ValueError):
        joint_pmf(m, [0, 2, 1])


def test_log_space_branch_matches_linear():
    # n > 30 goes through log space
    m = CorrelationModel(31, 0.9)
    x = np.array([0] * 20 + [1] * 11)
    z = 20
    direct = 0.5 * (0.9**z * 0.1 ** (31 - z) + 0.1**z * 0.9 ** (31 - z))
    assert joint_pmf(m, x) == pytest.approx(direct, rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=1, max_size=40), st.floats(0.5, 1.0), st.randoms())
def test_pmf_symmetries(x, rho, rnd):
    m = CorrelationModel(len(x), rho)
    p = joint_pmf(m, x)
    assert joint_pmf(m, [1 - b for b in x]) == pytest.approx(p, rel=1e-12, abs=1e-300)
    y = list(x)
    rnd.shuffle(y)
    assert joint_pmf(m, y) == pytest.approx(p, rel=1e-12, abs=1e-300)


def test_column_histogram_matches_pmf():
    n, rho = 3, 0.9
    bits = generate_block(CorrelationModel(n, rho), L_BIG, seed=11).bits
    codes = bits[0] * 4 + bits[1] * 2 + bits[2]
    counts = np.bincount(codes, minlength=8)
    for c in range(8):
        x = [(c >> 2) & 1, (c >> 1) & 1, c & 1]
        p = joint_pmf(CorrelationModel(n, rho), x)
        assert abs(counts[c] - L_BIG * p) < 4 * math.sqrt(L_BIG * p * (1 - p))
