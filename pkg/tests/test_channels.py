import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from relaycode.channels import (
    ChannelModel, bpsk, channel_llr, correlation_llr, es_n0_db, known_llr, sample_dsbs,
    sigma2_from_es_n0_db, transmit,
)
from relaycode.info_region import binary_entropy

N = 10**6


def three_sigma(p, n):
    return 3 * math.sqrt(p * (1 - p) / n)


def test_dsbs_small_rho():
    w1, w2 = sample_dsbs(1e-3, N, seed=0)
    assert abs(np.mean(w1 != w2) - 1e-3) < three_sigma(1e-3, N)


def test_dsbs_entropy_and_uniform_marginals():
    w1, w2 = sample_dsbs(0.1, N, seed=1)
    p_hat = np.mean(w1 != w2)
    assert binary_entropy(p_hat) == pytest.approx(binary_entropy(0.1), abs=5e-3)
    for w in (w1, w2):
        assert abs(w.mean() - 0.5) < three_sigma(0.5, N)


def test_dsbs_domain_and_reproducible():
    with pytest.raises(ValueError):
        sample_dsbs(0.5, 10)
    a = sample_dsbs(0.2, 100, seed=7)
    b = sample_dsbs(0.2, 100, seed=7)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))


def test_channel_model_validation():
    with pytest.raises(ValueError):
        ChannelModel.biawgn(0.0)
    with pytest.raises(ValueError):
        ChannelModel.bsc(0.7)
    with pytest.raises(ValueError):
        ChannelModel.bec(1.5)
    with pytest.raises(ValueError):
        ChannelModel("rayleigh", 1.0)


def test_noiseless_transmission_is_bpsk():
    x = np.array([0, 1, 1, 0])
    assert np.array_equal(transmit(ChannelModel.noiseless(), x), [1.0, -1.0, -1.0, 1.0])


def test_bsc_flip_rate():
    y = transmit(ChannelModel.bsc(0.184), np.zeros(N, np.uint8), seed=2)
    assert abs(y.mean() - 0.184) < three_sigma(0.184, N)


def test_biawgn_noise_variance():
    x = np.random.default_rng(3).integers(0, 2, N)
    y = transmit(ChannelModel.biawgn(0.7), x, seed=4)
    assert np.var(y - bpsk(x)) == pytest.approx(0.7, rel=0.01)


def test_bec_erasure_rate():
    y = transmit(ChannelModel.bec(0.3), np.ones(N, np.uint8), seed=5)
    assert abs(np.mean(y < 0) - 0.3) < three_sigma(0.3, N)
    assert set(np.unique(y)) == {-1, 1}


def test_llr_closed_forms():
    assert channel_llr(ChannelModel.biawgn(0.5), np.array([0.0]))[0] == 0.0
    assert channel_llr(ChannelModel.biawgn(0.5), np.array([0.3]))[0] == pytest.approx(1.2)
    assert channel_llr(ChannelModel.bsc(0.1), np.array([0]))[0] == pytest.approx(math.log(9), abs=1e-12)
    assert channel_llr(ChannelModel.bsc(0.1), np.array([1]))[0] == pytest.approx(-math.log(9), abs=1e-12)
    bec = channel_llr(ChannelModel.bec(0.2), np.array([-1, 0, 1]))
    assert bec[0] == 0.0 and bec[1] == np.inf and bec[2] == -np.inf
    assert np.array_equal(known_llr([0, 1]), [np.inf, -np.inf])


def test_correlation_llr():
    assert correlation_llr(0.05, 0) == pytest.approx(math.log(19))
    assert correlation_llr(0.05, 1) == pytest.approx(-math.log(19))
    assert abs(correlation_llr(0.4999999, 0)) < 1e-5
    with pytest.raises(ValueError):
        correlation_llr(0.0, 0)


@settings(max_examples=30, deadline=None)
@given(s2=st.floats(0.05, 5.0), y=st.lists(st.floats(-5, 5), min_size=1, max_size=20))
def test_biawgn_llr_linear_and_antisymmetric(s2, y):
    ch = ChannelModel.biawgn(s2)
    y = np.array(y)
    assert np.allclose(channel_llr(ch, -y), -channel_llr(ch, y))
    assert np.allclose(channel_llr(ch, 2 * y), 2 * channel_llr(ch, y))


def test_biawgn_output_symmetry():
    ch = ChannelModel.biawgn(0.8)
    l0 = channel_llr(ch, transmit(ch, np.zeros(N, np.uint8), seed=6))
    l1 = channel_llr(ch, transmit(ch, np.ones(N, np.uint8), seed=6))
    # same noise realisation: flipping the input shifts every LLR by -4/sigma^2
    assert np.allclose(l1, l0 - 4.0 / 0.8)
    assert np.mean(l1) == pytest.approx(-np.mean(l0), rel=0.02)
    assert np.std(l1) == pytest.approx(np.std(l0), rel=1e-9)
    # symmetric density: E[exp(-L)] = 1 under a zero input
    assert np.mean(np.exp(-l0)) == pytest.approx(1.0, abs=0.05)


def test_es_n0_conversion():
    assert es_n0_db(0.5) == pytest.approx(0.0)
    assert sigma2_from_es_n0_db(es_n0_db(0.83)) == pytest.approx(0.83)
