import numpy as np
import pytest

from corrmac.channel import ChannelConfig, transmit
from corrmac.exitchart import ExitSettings, find_standalone_threshold
from corrmac.region import snr_from_capacity
from corrmac.sccc import ScccCode, sccc_decode


def test_shape_and_interleaver():
    code = ScccCode(100, interleaver_seed=3)
    assert code.N == 2 * 102 and code.rate == pytest.approx(100 / 204)
    assert np.array_equal(np.sort(code.interleaver), np.arange(code.N))
    assert np.array_equal(code.interleaver, ScccCode(100, interleaver_seed=3).interleaver)
    with pytest.raises(ValueError):
        ScccCode(10, interleaver_seed=None, interleaver=np.zeros(24, dtype=int))
    with pytest.raises(ValueError):
        ScccCode(0)


def test_text_round_trip():
    code = ScccCode(50, interleaver_seed=9)
    back = ScccCode.from_text(code.to_text())
    assert np.array_equal(back.interleaver, code.interleaver)
    explicit = ScccCode(50, interleaver_seed=None, interleaver=code.interleaver[::-1].copy())
    assert np.array_equal(ScccCode.from_text(explicit.to_text()).interleaver, explicit.interleaver)
    with pytest.raises(ValueError):
        ScccCode.from_text("ldpc\n")


def test_encode_is_linear():
    code = ScccCode(64, 1)
    rng = np.random.default_rng(0)
    a, b = rng.integers(0, 2, (2, 64)).astype(np.uint8)
    assert np.array_equal(code.encode(a ^ b), code.encode(a) ^ code.encode(b))
    assert not code.encode(np.zeros(64, dtype=np.uint8)).any()


def test_noiseless_one_iteration():
    code = ScccCode(500, 2)
    u = np.random.default_rng(1).integers(0, 2, 500).astype(np.uint8)
    ch = 50.0 * (1 - 2.0 * code.encode(u))
    post, _ = sccc_decode(ch, np.zeros(500), code, 1)
    assert np.array_equal((post < 0).astype(np.uint8), u)


def test_zero_apriori_is_neutral():
    code = ScccCode(200, 2)
    u = np.random.default_rng(1).integers(0, 2, 200).astype(np.uint8)
    ch = transmit(code.encode(u), ChannelConfig.from_snr(1.0), seed=4)
    a = code.decode(ch, None, 4)
    b = code.decode(ch, np.zeros(200), 4)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))


def test_batch_decode_matches_single():
    code = ScccCode(60, 2)
    rng = np.random.default_rng(5)
    ch = rng.normal(1, 2, (3, code.N))
    ap = rng.normal(0, 1, (3, 60))
    post, ext = code.decode(ch, ap, 3)
    for k in range(3):
        p, e = code.decode(ch[k], ap[k], 3)
        assert np.array_equal(post[k], p) and np.array_equal(ext[k], e)


@pytest.mark.slow
def test_more_iterations_help_above_threshold():
    code = ScccCode(4096, 0)
    lam = find_standalone_threshold(code, ExitSettings(mc_samples=10**5))
    gamma = snr_from_capacity(lam) * 10 ** 0.05
    rng = np.random.default_rng(12)
    errs = {2: 0, 10: 0}
    for b in range(100):
        u = rng.integers(0, 2, code.L).astype(np.uint8)
        ch = transmit(code.encode(u), ChannelConfig.from_snr(gamma), seed=1000 + b)
        for it in errs:
            post, _ = sccc_decode(ch, np.zeros(code.L), code, it)
            errs[it] += int(np.count_nonzero((post < 0) != u))
    assert errs[10] <= errs[2]
