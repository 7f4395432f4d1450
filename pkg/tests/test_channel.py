import json
import math

import numpy as np
import pytest

from ppclab.channel import (
    BinaryInputDMC,
    bec,
    binary_entropy,
    bsc,
    conditional_entropy_x_given_y,
    from_config,
    concentration_constants,
    log_likelihood,
    mutual_information,
    output_marginal,
    transmit,
)


def test_output_marginal_examples():
    assert np.allclose(output_marginal(bsc(0.3)), [0.5, 0.5])
    e = 0.3
    assert np.allclose(output_marginal(bec(e)), [(1 - e) / 2, e, (1 - e) / 2])
    assert np.allclose(output_marginal(bsc(0.1, (0.75, 0.25))), [0.7, 0.3])


def test_mutual_information_examples():
    assert mutual_information(bsc(0.0)) == pytest.approx(1.0)
    assert mutual_information(bsc(0.11)) == pytest.approx(1 - binary_entropy(0.11))
    assert mutual_information(bsc(0.11)) == pytest.approx(0.5, abs=1e-3)
    assert mutual_information(bec(0.5)) == pytest.approx(0.5)


def test_conditional_entropy_examples():
    assert conditional_entropy_x_given_y(bsc(0.0)) == pytest.approx(0.0, abs=1e-12)
    assert conditional_entropy_x_given_y(bec(0.5)) == pytest.approx(0.5)
    assert conditional_entropy_x_given_y(bsc(0.11)) == pytest.approx(0.4999, abs=1e-3)


def test_concentration_constants_examples():
    c = concentration_constants(bsc(0.0))
    assert (c.beta_qw, c.beta_q, c.beta_t, c.d) == (1.0, 1.0, 1.0, 0.0)
    c = concentration_constants(bsc(0.1))
    assert c.beta_qw == pytest.approx(9.0)
    assert c.beta_q == c.beta_t == pytest.approx(1.0)
    assert c.d_i == pytest.approx(3.1699, abs=1e-4)
    assert c.d == pytest.approx(10.048, abs=1e-3)
    c = concentration_constants(bec(0.5))
    assert c.beta_qw == pytest.approx(1.0)
    assert c.beta_t == pytest.approx(2.0)
    assert c.d_i == pytest.approx(1.0)
    assert c.d == pytest.approx(1.0)


def test_transmit_examples(rng):
    x = rng.integers(0, 2, size=50)
    assert np.array_equal(transmit(bsc(0.0), x, rng), x)
    assert np.all(transmit(bec(1.0), x, rng) == 1)
    flips = transmit(bsc(0.3), np.zeros(10**5, dtype=int), rng)
    assert abs(flips.mean() - 0.3) < 0.01


def test_transmit_bec_never_flips(rng):
    x = rng.integers(0, 2, size=10**4)
    y = transmit(bec(0.4), x, rng)
    seen = y != 1
    assert np.array_equal(y[seen] // 2, x[seen])


def test_log_likelihood_examples():
    assert log_likelihood(bsc(0.0), [0, 1], [0, 1]) == 0.0
    assert log_likelihood(bsc(0.0), [0, 1], [1, 1]) == -math.inf
    assert log_likelihood(bsc(0.1), [0, 0], [0, 1]) == pytest.approx(math.log2(0.9 * 0.1))


def test_validation():
    with pytest.raises(ValueError):
        BinaryInputDMC([[0.5, 0.6], [0.5, 0.5]], (0.5, 0.5))
    with pytest.raises(ValueError):
        BinaryInputDMC([[0.5, 0.5], [0.5, 0.5]], (0.7, 0.7))
    with pytest.raises(ValueError):
        bsc(1.5)


def test_config_roundtrip():
    for ch in (bsc(0.2, (0.6, 0.4)), bec(0.3)):
        again = from_config(json.dumps(ch.to_config()))
        assert np.allclose(again.w, ch.w) and np.allclose(again.q, ch.q)
    m = from_config({"kind": "matrix", "w": [[0.8, 0.2], [0.3, 0.7]], "q": [0.4, 0.6]})
    assert m.output_alphabet_size == 2
    assert np.isclose(m.joint.sum(), 1.0)
    with pytest.raises(ValueError):
        from_config({"kind": "awgn"})


def _random_channel(rng):
    ny = int(rng.integers(2, 6))
    w = rng.dirichlet(np.ones(ny), size=2)
    w[rng.random(w.shape) < 0.2] = 0.0
    w[:, 0] += 1e-3
    w /= w.sum(axis=1, keepdims=True)
    q1 = float(rng.uniform(0.01, 0.99))
    return BinaryInputDMC(w, (1 - q1, q1))


def test_random_channel_properties(rng):
    for _ in range(1000):
        ch = _random_channel(rng)
        assert abs(output_marginal(ch).sum() - 1) < 1e-12
        mi = mutual_information(ch)
        assert -1e-12 <= mi <= min(binary_entropy(ch.q[1]), math.log2(ch.output_alphabet_size)) + 1e-12
        c = concentration_constants(ch)
        assert c.beta_qw >= 1 and c.beta_q >= 1 and c.beta_t >= 1


def test_beta_equality_iff_uniform():
    c = concentration_constants(bsc(0.3, (0.4, 0.6)))
    assert c.beta_q > 1 and c.beta_qw > 1
    c = concentration_constants(bec(0.0))
    assert c.beta_qw == c.beta_q == c.beta_t == 1.0


def test_transmit_matches_likelihood(rng):
    ch = BinaryInputDMC([[0.6, 0.3, 0.1], [0.1, 0.2, 0.7]], (0.5, 0.5))
    x = np.array([0, 1, 1])
    trials = 10**6
    y = transmit(ch, np.broadcast_to(x, (trials, 3)), rng)
    idx = y[:, 0] * 9 + y[:, 1] * 3 + y[:, 2]
    freq = np.bincount(idx, minlength=27) / trials
    for k in range(27):
        yy = [k // 9, (k // 3) % 3, k % 3]
        p = 2.0 ** log_likelihood(ch, x, yy)
        assert abs(freq[k] - p) <= 3 * math.sqrt(p * (1 - p) / trials) + 1e-12
