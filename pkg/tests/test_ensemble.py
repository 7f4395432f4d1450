import numpy as np
import pytest
from scipy import stats

from ppclab.channel import bec, bsc
from ppclab.ensemble import (
    ParityCheckEnsemble,
    SamplingError,
    codebook_size,
    conditional_codeword_distribution,
    gallager_ldpc_matrix,
    odd_even_constraint,
    packed_syndromes,
    parity_constraint,
    sample_constrained_code,
    sample_unconstrained_code,
    syndrome_distribution,
    verify_marginal_recovery,
)
from ppclab.gf2 import BitMatrix, pack_rows, syndromes, unpack_words

from conftest import all_words, random_full_rank

SINGLE = BitMatrix.from_array([[1, 1]])


def ens(h, q1=0.5, ch=None):
    ch = ch or bsc(0.1, (1 - q1, q1))
    return ParityCheckEnsemble(h, ch)


def test_symmetric_constraints(rng):
    assert odd_even_constraint().is_symmetric(5)
    assert parity_constraint(random_full_rank(2, 5, rng)).is_symmetric(5)


def test_syndrome_distribution_examples(rng):
    h = random_full_rank(3, 7, rng)
    assert np.allclose(syndrome_distribution(ens(h)), 2.0**-3)
    assert np.allclose(syndrome_distribution(ens(SINGLE, 0.25)), [0.625, 0.375])
    assert syndrome_distribution(ens(BitMatrix.zeros(0, 4))).tolist() == [1.0]


def test_syndrome_distribution_is_coset_mass(rng):
    h = random_full_rank(3, 8, rng)
    e = ens(h, 0.3)
    p = syndrome_distribution(e)
    words = np.arange(256)
    w = np.bitwise_count(words)
    mass = 0.3**w * 0.7 ** (8 - w)
    s = packed_syndromes(h, words)
    for j in range(8):
        assert p[j] == pytest.approx(mass[s == j].sum(), abs=1e-14)
    assert p.sum() == pytest.approx(1.0, abs=1e-9)


def test_rank_deficient_has_unreachable_syndromes():
    h = BitMatrix.from_array([[1, 1, 0], [1, 1, 0]])
    p = syndrome_distribution(ens(h))
    assert p.tolist() == [0.5, 0.0, 0.0, 0.5]
    with pytest.raises(ValueError):
        conditional_codeword_distribution(ens(h), 1)


def test_exact_p_s_too_large():
    h = BitMatrix.zeros(1, 22)
    with pytest.raises(ValueError, match="sampl"):
        syndrome_distribution(ens(h, 0.3))


def test_conditional_distribution_examples(rng):
    h = random_full_rank(2, 6, rng)
    d = conditional_codeword_distribution(ens(h), 3)
    assert d.words.size == 16 and np.allclose(d.probs, 1 / 16)
    assert np.all(packed_syndromes(h, d.words) == 3)
    d = conditional_codeword_distribution(ens(SINGLE, 0.25), 1)
    assert sorted(d.words.tolist()) == [1, 2] and np.allclose(d.probs, 0.5)
    d = conditional_codeword_distribution(ens(BitMatrix.identity(4), 0.3), 0b1010)
    assert d.words.tolist() == [0b1010] and d.probs.tolist() == [1.0]


def test_marginal_recovery_examples(rng):
    for n in (3, 6, 10):
        assert verify_marginal_recovery(ens(random_full_rank(2, n, rng))) < 1e-12
    h = BitMatrix.from_array([[1, 1, 0], [0, 1, 1]])
    assert verify_marginal_recovery(ens(h, 0.3)) < 1e-12
    assert verify_marginal_recovery(ens(BitMatrix.identity(5), 0.3)) == 0.0


def test_codebook_size():
    assert codebook_size(8, 0.125) == 2
    assert codebook_size(16, 0.25) == 16
    assert codebook_size(4, 0.01) == 2


def test_samples_satisfy_syndrome(rng):
    for q1 in (0.5, 0.3):
        e = ens(random_full_rank(3, 9, rng), q1)
        for _ in range(10):
            code = sample_constrained_code(e, 0.5, rng)
            assert code.size == codebook_size(9, 0.5)
            assert np.all(syndromes(e.h, code.codewords) == code.syndrome)
    code = sample_constrained_code(ens(random_full_rank(3, 9, rng), 0.3), 0.5, rng, method="rejection")
    assert code.size == codebook_size(9, 0.5)


def test_coset_uniformity_chi_square(rng):
    h = random_full_rank(3, 8, rng)
    e = ens(h)
    code = sample_constrained_code(e, 0.5, rng, size=10**5)
    counts = np.bincount(pack_rows(code.codewords), minlength=256)
    members = conditional_codeword_distribution(e, int(pack_rows(code.syndrome[None, :])[0])).words
    assert counts[members].sum() == 10**5
    assert stats.chisquare(counts[members]).pvalue > 0.001


def test_marginal_matches_q(rng):
    for q1 in (0.5, 0.3):
        e = ens(random_full_rank(3, 8, rng), q1)
        words = np.vstack([sample_constrained_code(e, 0.1, rng, size=1).codewords
                           for _ in range(20000)])
        se = np.sqrt(q1 * (1 - q1) / words.shape[0])
        assert np.all(np.abs(words.mean(axis=0) - q1) < 3.5 * se)


def test_r_zero_is_unconstrained(rng):
    e = ens(BitMatrix.zeros(0, 6), 0.3)
    a = sample_constrained_code(e, 1.0, np.random.default_rng(1)).codewords
    b = sample_unconstrained_code(e.channel.q, 6, 1.0, np.random.default_rng(1)).codewords
    assert a.shape == b.shape == (64, 6)
    assert abs(a.mean() - 0.3) < 0.05 and abs(b.mean() - 0.3) < 0.05


def test_rejection_budget_exhausted(rng):
    ch = bsc(0.1, (0.99, 0.01))
    e = ParityCheckEnsemble(BitMatrix.identity(10), ch)
    with pytest.raises(SamplingError, match="accepted"):
        for _ in range(50):
            sample_constrained_code(e, 0.5, rng, method="rejection", max_trials=10)


def test_gallager_examples(rng):
    h = gallager_ldpc_matrix(4, 2, 1, rng).to_array()
    assert h.shape == (2, 4) and np.all(h.sum(1) == 2) and np.all(h.sum(0) == 1)
    h = gallager_ldpc_matrix(12, 4, 2, rng).to_array()
    assert h.shape == (6, 12) and np.all(h.sum(1) == 4) and np.all(h.sum(0) == 2)
    with pytest.raises(ValueError):
        gallager_ldpc_matrix(6, 4, 3, rng)


def test_coset_partition(rng):
    for n in (4, 7, 10):
        h = random_full_rank(3, n, rng)
        s = packed_syndromes(h, np.arange(1 << n))
        assert np.all(np.bincount(s, minlength=8) == 1 << (n - 3))


def test_bec_input_distribution():
    e = ParityCheckEnsemble(SINGLE, bec(0.5))
    assert unpack_words(conditional_codeword_distribution(e, 0).words, 2).sum(1).tolist() in ([0, 2], [2, 0])
    assert all_words(2).shape == (4, 2)


def test_odd_even_is_all_ones_parity():
    oe = odd_even_constraint()
    pc = parity_constraint(BitMatrix.from_array(np.ones((1, 5), dtype=int)))
    for word in all_words(5):
        assert [oe.phi(s, word) for s in (0, 1)] == [pc.phi(s, word) for s in (0, 1)]


def test_parity_symmetry_n12(rng):
    assert parity_constraint(random_full_rank(3, 12, rng)).is_symmetric(12)


def test_syndrome_and_output_independent_of_message(rng):
    from ppclab.channel import transmit

    e = ens(random_full_rank(2, 4, rng))
    trials = 10**5
    table = np.zeros((2, 4 * 16), dtype=np.int64)
    for _ in range(trials):
        code = sample_constrained_code(e, 0.25, rng)
        m = int(rng.integers(0, 2))
        y = transmit(e.channel, code.codewords[m], rng)
        s = int(pack_rows(code.syndrome[None, :])[0])
        table[m, s * 16 + int(pack_rows(y[None, :])[0])] += 1
    keep = table.sum(axis=0) > 0
    assert stats.chi2_contingency(table[:, keep]).pvalue > 0.001
