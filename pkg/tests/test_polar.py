import json

import numpy as np
import pytest

from ppclab.channel import bec, bsc, conditional_entropy_x_given_y
from ppclab.ensemble import ParityCheckEnsemble
from ppclab.gf2 import BitMatrix, rank, syndromes
from ppclab.info import exact_leakage
from ppclab.polar import (
    PolarDesign,
    bec_exact_entropies,
    build_design,
    exhaustive_entropies,
    frozen_threshold,
    leakage_upper_bound,
    monte_carlo_entropies,
    polar_encode,
    polar_generator_matrix,
    polar_parity_matrix,
    polar_transform_matrix,
    select_frozen_set,
    select_frozen_set_for_rate,
)


def test_encode_examples(rng):
    assert polar_encode(3, np.zeros(8)).tolist() == [0] * 8
    assert polar_encode(1, [0, 1]).tolist() == [1, 1]
    for ell in range(11):
        u = rng.integers(0, 2, (3, 1 << ell))
        assert np.array_equal(polar_encode(ell, polar_encode(ell, u)), u)


def test_encode_matches_matrix(rng):
    for ell in range(1, 6):
        g = polar_transform_matrix(ell).to_array().astype(int)
        u = rng.integers(0, 2, (20, 1 << ell))
        assert np.array_equal(polar_encode(ell, u), (u @ g) % 2)


def test_bec_exact_examples():
    assert bec_exact_entropies(1, 0.5).tolist() == [0.75, 0.25]
    assert np.all(bec_exact_entropies(4, 0.0) == 0)
    assert np.all(bec_exact_entropies(4, 1.0) == 1)
    assert bec_exact_entropies(2, 0.5).tolist() == [0.9375, 0.5625, 0.4375, 0.0625]


def test_exhaustive_matches_bec_exact():
    for ell in (1, 2, 3):
        assert np.allclose(exhaustive_entropies(ell, bec(0.5)), bec_exact_entropies(ell, 0.5), atol=1e-9)


def test_exhaustive_examples():
    assert np.allclose(exhaustive_entropies(3, bsc(0.0)), 0, atol=1e-12)
    ch = bsc(0.1, (0.7, 0.3))
    assert exhaustive_entropies(2, ch).sum() == pytest.approx(4 * conditional_entropy_x_given_y(ch), abs=1e-9)


def test_monte_carlo_matches_exact(rng):
    mean, se = monte_carlo_entropies(4, bec(0.5), 10**5, rng)
    exact = bec_exact_entropies(4, 0.5)
    assert np.all(np.abs(mean - exact) <= 3 * se + 1e-12)
    mean, _ = monte_carlo_entropies(3, bsc(0.0), 100, rng)
    assert np.all(mean == 0)
    mean, _ = monte_carlo_entropies(3, bsc(0.2), 1, rng)
    assert np.all((mean >= 0) & (mean <= 1))


def test_monte_carlo_bsc_matches_exhaustive(rng):
    mean, se = monte_carlo_entropies(3, bsc(0.11), 40000, rng)
    assert np.all(np.abs(mean - exhaustive_entropies(3, bsc(0.11))) <= 4 * se + 1e-9)


def test_monte_carlo_rejects_nonuniform(rng):
    with pytest.raises(ValueError):
        monte_carlo_entropies(2, bsc(0.1, (0.3, 0.7)), 10, rng)


def test_select_frozen_examples():
    d = select_frozen_set([0.75, 0.25], 0.25)
    # 2^(-2^0.25) = 0.43854...
    assert d.threshold == pytest.approx(0.4387, abs=5e-4)
    assert d.frozen == (0,)
    assert select_frozen_set(np.zeros(8)).frozen == ()
    d = select_frozen_set(np.ones(8))
    assert d.frozen == d.class_H == tuple(range(8))


def test_classes_partition():
    h = bec_exact_entropies(6, 0.5)
    d = select_frozen_set(h, 0.25)
    parts = sorted(d.class_L + d.class_M + d.class_H)
    assert parts == list(range(64))
    assert set(d.frozen) == set(d.class_M) | set(d.class_H)
    assert d.threshold == frozen_threshold(64, 0.25)


def test_parity_matrix_examples():
    d = select_frozen_set([0.75, 0.25], 0.25)
    assert polar_parity_matrix(d).to_array().tolist() == [[1, 1]]
    h = polar_parity_matrix(select_frozen_set(np.zeros(4)))
    assert h.shape == (0, 4)
    d = select_frozen_set(np.ones(8))
    h = polar_parity_matrix(d)
    assert h == polar_transform_matrix(3).T and rank(h) == 8


def test_parity_matrix_reads_frozen_bits(rng):
    d = select_frozen_set(bec_exact_entropies(4, 0.5))
    h = polar_parity_matrix(d)
    assert rank(h) == len(d.frozen)
    u = rng.integers(0, 2, (10, 16))
    x = polar_encode(4, u)
    assert np.array_equal(syndromes(h, x), u[:, list(d.frozen)])
    gen = polar_generator_matrix(d).to_array()
    assert not syndromes(h, gen).any()


def test_rate_rule():
    d = select_frozen_set_for_rate(bec_exact_entropies(4, 0.5), 0.5)
    assert len(d.info) == 8 and d.rule == "rate" and d.meta["non_threshold_rule"]


def test_leakage_bound_examples():
    d = select_frozen_set(bec_exact_entropies(3, 0.0))
    assert leakage_upper_bound(d) == 0
    d = select_frozen_set(bec_exact_entropies(3, 1.0))
    assert d.frozen == d.class_H == tuple(range(8)) and leakage_upper_bound(d) == 0
    for ell in (1, 2, 3):
        d = build_design({"ell": ell}, bec(0.5))
        ens = ParityCheckEnsemble(polar_parity_matrix(d), bec(0.5))
        assert leakage_upper_bound(d) >= exact_leakage(ens) - 1e-12


def test_polarization_trend():
    mids = [len(select_frozen_set(bec_exact_entropies(ell, 0.5)).class_M) / (1 << ell) for ell in (8, 12, 16, 20)]
    assert mids[0] > mids[1] > mids[2] > mids[3]
    # the frozen fraction approaches 1 - I(X;Y) = 0.5 from above
    frac = [len(select_frozen_set(bec_exact_entropies(ell, 0.5)).frozen) / (1 << ell) for ell in (8, 14, 20)]
    assert frac[0] > frac[1] > frac[2] > 0.5


def test_design_json_roundtrip(rng):
    d = build_design({"ell": 3, "method": "monte-carlo", "trials": 200}, bsc(0.1), rng)
    again = PolarDesign.from_json(d.to_json())
    assert again == d
    assert json.loads(d.to_json())["meta"]["method"] == "monte-carlo"
    with pytest.raises(ValueError):
        build_design({"ell": 2, "method": "bec-exact"}, bsc(0.1))


def test_chain_rule_conservation():
    for ch in (bec(0.3), bsc(0.11), bsc(0.1, (0.7, 0.3))):
        for ell in (1, 2, 3):
            h = exhaustive_entropies(ell, ch)
            assert h.sum() == pytest.approx((1 << ell) * conditional_entropy_x_given_y(ch), abs=1e-9)
    assert bec_exact_entropies(8, 0.3).sum() == pytest.approx(256 * 0.3, abs=1e-9)


def test_middle_class_non_increasing():
    mids = [len(select_frozen_set(bec_exact_entropies(ell, 0.5)).class_M) / (1 << ell) for ell in (2, 4, 6, 8)]
    assert all(b <= a for a, b in zip(mids, mids[1:]))


def test_frozen_fraction_near_conditional_entropy():
    d = select_frozen_set(bec_exact_entropies(10, 0.5), 0.25)
    frac = len(d.frozen) / d.n
    assert abs(frac - 0.5) <= 0.1, f"|F|/n = {frac:.4f}, H(X|Y) = 0.5"


def test_parity_matrix_full_rank():
    for ch in (bec(0.5), bsc(0.11)):
        for ell in (1, 2, 3):
            d = build_design({"ell": ell}, ch)
            assert rank(polar_parity_matrix(d)) == len(d.frozen)
