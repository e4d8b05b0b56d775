import math

import numpy as np
import pytest

from relaycode.binary_matrix import SparseBinaryMatrix, mat_vec_syndrome, peel_erasures
from relaycode.bp_decoding import (
    DecodeResult, SumProductDecoder, bp_channel_decode, joint_decode, separate_decode, sw_source_decode,
)
from relaycode.channels import ChannelModel, channel_llr, known_llr, sample_dsbs, sigma2_from_es_n0_db, transmit
from relaycode.code_construction import peg_construct, regular_ensemble, relay_encode, table1_ensemble
from relaycode.simulation import ExperimentConfig, sweep_snr


def random_codeword(cb, rng):
    b1, b2 = rng.integers(0, 2, cb.k1), rng.integers(0, 2, cb.k2)
    return np.concatenate([b1, b2, relay_encode(cb, b1, b2)]).astype(np.uint8)


# ---- message rules

def test_decode_result_contract():
    with pytest.raises(ValueError):
        DecodeResult({}, True, 3, 2)


def test_three_edge_star_messages():
    # one check joined to three variables
    dec = SumProductDecoder(SparseBinaryMatrix(1, 3, [[0, 1, 2]]))
    prior = np.array([1.2, -0.7, 2.5])
    v2c, total = dec.var_to_check(prior, np.zeros(3))
    assert np.allclose(v2c, prior) and np.allclose(total, prior)
    c2v = dec.check_to_var(v2c)
    th = np.tanh(prior / 2)
    hand = [2 * math.atanh(th[1] * th[2]), 2 * math.atanh(th[0] * th[2]), 2 * math.atanh(th[0] * th[1])]
    assert np.allclose(c2v, hand, atol=1e-12)
    # a target parity of one flips every outgoing sign
    assert np.allclose(dec.check_to_var(v2c, np.array([1])), -np.array(hand), atol=1e-12)
    # the next variable message excludes the edge's own incoming check message
    v2c2, total2 = dec.var_to_check(prior, c2v)
    assert np.allclose(v2c2, prior) and np.allclose(total2, prior + hand)


def test_check_update_with_a_zero_message():
    dec = SumProductDecoder(SparseBinaryMatrix(1, 3, [[0, 1, 2]]))
    c2v = dec.check_to_var(np.array([0.0, 3.0, -4.0]))
    assert c2v[1] == 0.0 and c2v[2] == 0.0
    assert c2v[0] == pytest.approx(2 * math.atanh(math.tanh(1.5) * math.tanh(-2.0)))


def test_prior_length_checked(codebook_1000):
    with pytest.raises(ValueError):
        bp_channel_decode(codebook_1000.H, np.zeros(5))


# ---- channel decoding

def test_noiseless_codeword_converges_immediately(codebook_1000):
    c = random_codeword(codebook_1000, np.random.default_rng(0))
    res = bp_channel_decode(codebook_1000.H, known_llr(c))
    assert res.converged and res.iterations <= 1
    assert np.array_equal(res.decisions["all"], c)


def test_bec_bp_matches_peeling():
    H = peg_construct(regular_ensemble(3, 6), 120, seed=4)
    dec = SumProductDecoder(H)
    rng = np.random.default_rng(1)
    for _ in range(100):
        eps = rng.uniform(0.2, 0.6)
        c = np.zeros(H.n_cols, np.uint8)
        known = rng.random(H.n_cols) >= eps
        prior = np.where(known, known_llr(c), 0.0)
        res = dec.decode(prior, max_iters=10_000, early_stop=False)
        peel = peel_erasures(H, known, np.where(known, c, 0))
        assert np.array_equal(res.posterior != 0, peel.resolved)
        assert np.array_equal(res.decisions["all"][peel.resolved], peel.values[peel.resolved])


def test_bec_bp_matches_peeling_nonzero_codeword(codebook_1000):
    cb = codebook_1000
    dec = SumProductDecoder(cb.H)
    rng = np.random.default_rng(2)
    for _ in range(10):
        c = random_codeword(cb, rng)
        known = rng.random(cb.H.n_cols) >= 0.45
        res = dec.decode(np.where(known, known_llr(c), 0.0), max_iters=10_000, early_stop=False)
        peel = peel_erasures(cb.H, known, np.where(known, c, 0))
        assert np.array_equal(res.posterior != 0, peel.resolved)
        assert np.array_equal(res.decisions["all"][peel.resolved], c[peel.resolved])


def test_pinned_variables_never_flip(codebook_1000):
    cb = codebook_1000
    rng = np.random.default_rng(3)
    c = random_codeword(cb, rng)
    prior = channel_llr(ChannelModel.biawgn(1.5), transmit(ChannelModel.biawgn(1.5), c, rng))
    pinned = rng.random(c.size) < 0.3
    wrong = c ^ (rng.random(c.size) < 0.5)               # pins need not agree with the codeword
    prior[pinned] = known_llr(wrong[pinned])
    dec = SumProductDecoder(cb.H)
    c2v = np.zeros(cb.H.nnz)
    for _ in range(30):
        v2c, total = dec.var_to_check(prior, c2v)
        assert np.array_equal(total[pinned] < 0, wrong[pinned] == 1)
        c2v = dec.check_to_var(v2c)


def test_all_zero_symmetry_exact(codebook_1000):
    # a codeword c with noise z mirrored on c's ones decodes to c xor (zero-word decision)
    cb = codebook_1000
    rng = np.random.default_rng(4)
    s2 = 1.0
    for _ in range(5):
        c = random_codeword(cb, rng)
        z = rng.normal(0, math.sqrt(s2), c.size)
        llr0 = 2 * (1 + z) / s2
        llr_c = np.where(c == 1, -llr0, llr0)
        r0 = bp_channel_decode(cb.H, llr0)
        rc = bp_channel_decode(cb.H, llr_c)
        assert rc.iterations == r0.iterations
        assert np.array_equal(rc.decisions["all"], r0.decisions["all"] ^ c)


def test_all_zero_vs_random_codeword_wer(codebook_1000):
    cb = codebook_1000
    ch = ChannelModel.biawgn(0.95)
    rng = np.random.default_rng(5)
    errs = [0, 0]
    trials = 150
    for _ in range(trials):
        for j, c in enumerate((np.zeros(cb.H.n_cols, np.uint8), random_codeword(cb, rng))):
            r = bp_channel_decode(cb.H, channel_llr(ch, transmit(ch, c, rng)), max_iters=100)
            errs[j] += not np.array_equal(r.decisions["all"], c)
    p = [e / trials for e in errs]
    pooled = sum(errs) / (2 * trials)
    sd = math.sqrt(max(pooled * (1 - pooled), 1e-9) * 2 / trials)
    assert abs(p[0] - p[1]) < 3 * sd + 1e-12


@pytest.fixture(scope="module")
def regular_2000():
    return peg_construct(regular_ensemble(3, 6), 2000, seed=0)


def test_regular_code_below_threshold(regular_2000):
    # the (3,6) BIAWGN density-evolution threshold is sigma^2 = 0.77 (see the DE tests)
    s2 = 0.62
    ch = ChannelModel.biawgn(s2)
    rng = np.random.default_rng(6)
    fails = 0
    for _ in range(200):
        r = bp_channel_decode(regular_2000, channel_llr(ch, transmit(ch, np.zeros(2000, np.uint8), rng)))
        fails += bool(r.decisions["all"].any())
    assert fails / 200 < 1e-2


# ---- Slepian-Wolf decoding

def test_sw_perfect_correlation(codebook_1000):
    Hs = codebook_1000.Hs1
    w = np.random.default_rng(7).integers(0, 2, Hs.n_cols).astype(np.uint8)
    res = sw_source_decode(Hs, mat_vec_syndrome(Hs, w), w, 1e-6)
    assert res.converged and res.iterations == 0
    assert np.array_equal(res.decisions["w"], w)


def test_sw_recovers_and_matches_syndrome(codebook_1000):
    Hs = codebook_1000.Hs2
    rng = np.random.default_rng(8)
    for _ in range(10):
        w1, w2 = sample_dsbs(0.05, Hs.n_cols, rng)
        s = mat_vec_syndrome(Hs, w2)
        res = sw_source_decode(Hs, s, w1, 0.05)
        if res.converged:
            assert np.array_equal(mat_vec_syndrome(Hs, res.decisions["w"]), s)
        assert np.array_equal(res.decisions["w"], w2)


@pytest.mark.slow
def test_sw_source_r12_large_block():
    Hs = peg_construct(table1_ensemble("source_r12"), 10_000, seed=0)
    rng = np.random.default_rng(9)
    fails = 0
    for _ in range(1000):
        w1, w2 = sample_dsbs(0.07, Hs.n_cols, rng)
        res = sw_source_decode(Hs, mat_vec_syndrome(Hs, w2), w1, 0.07)
        fails += not np.array_equal(res.decisions["w"], w2)
    assert fails / 1000 < 1e-3


# ---- relay decoders

def _relay_trial(cb, rho, llr_fn, rng):
    w = sample_dsbs(rho, cb.n, rng)
    b = (cb.compress(0, w[0]), cb.compress(1, w[1]))
    x = relay_encode(cb, *b)
    return w, b, x, llr_fn(x)


@pytest.mark.parametrize("decoder", [separate_decode, joint_decode])
@pytest.mark.parametrize("node", [0, 1])
def test_noiseless_downlink_exact_recovery(codebook_1000, decoder, node):
    rng = np.random.default_rng(10 + node)
    w, b, x, llr = _relay_trial(codebook_1000, 0.03, known_llr, rng)
    res = decoder(codebook_1000, node, w[node], b[node], llr, 0.03)
    assert res.converged
    assert np.array_equal(res.decisions["w"], w[1 - node])
    assert np.array_equal(res.decisions["b"], b[1 - node])
    assert np.array_equal(res.decisions["x"], x)


def test_joint_noiseless_downlink_any_rho(codebook_1000):
    # with the downlink noiseless the other index is fixed, so the joint decoder
    # recovers it even when the source part cannot converge
    rng = np.random.default_rng(12)
    w, b, x, llr = _relay_trial(codebook_1000, 0.3, known_llr, rng)
    res = joint_decode(codebook_1000, 0, w[0], b[0], llr, 0.3, max_iters=20)
    assert np.array_equal(res.decisions["b"], b[1])
    assert np.array_equal(res.decisions["x"], x)


def test_separate_stage_one_failure_is_flagged(codebook_1000):
    rng = np.random.default_rng(13)
    w, b, x, _ = _relay_trial(codebook_1000, 0.03, known_llr, rng)
    res = separate_decode(codebook_1000, 0, w[0], b[0], np.zeros(codebook_1000.n), 0.03, max_iters=20)
    assert res.stages[0][0] is False
    assert not res.converged and res.unsatisfied_checks > 0


def test_relay_decoder_input_validation(codebook_1000):
    cb = codebook_1000
    with pytest.raises(ValueError):
        joint_decode(cb, 2, np.zeros(cb.n), np.zeros(cb.k1), np.zeros(cb.n), 0.1)
    with pytest.raises(ValueError):
        separate_decode(cb, 0, np.zeros(cb.n), np.zeros(cb.k1), np.zeros(3), 0.1)


def test_useless_correlation_joint_matches_separate(codebook_1000):
    cb = codebook_1000
    ch = ChannelModel.biawgn(sigma2_from_es_n0_db(3.0))
    rng = np.random.default_rng(14)
    agree, trials = 0, 100
    for _ in range(trials):
        w, b, x, llr = _relay_trial(cb, 0.4999, lambda x: channel_llr(ch, transmit(ch, x, rng)), rng)
        rs = separate_decode(cb, 0, w[0], b[0], llr, 0.4999, max_iters=50)
        rj = joint_decode(cb, 0, w[0], b[0], llr, 0.4999, max_iters=50)
        same_index = np.array_equal(rs.decisions["b"], rj.decisions["b"])
        same_outcome = np.array_equal(rs.decisions["w"], w[1]) == np.array_equal(rj.decisions["w"], w[1])
        agree += same_index and same_outcome
    assert agree >= 0.99 * trials


@pytest.mark.slow
def test_separate_wer_monotone_in_snr(codebook_1000):
    cfg = ExperimentConfig(n=1000, rho=0.05, decoder="separate", trials=500, seed=3, max_iters=100)
    results = sweep_snr(cfg, [-2.6, -2.3, -2.0, -1.7, -1.4], codebook_1000)
    wers = [r.wer for r in results]
    assert all(b <= a for a, b in zip(wers, wers[1:])), wers
