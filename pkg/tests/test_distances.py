import math

import numpy as np
import pytest

from shiftmetrics import (
    BINARY,
    Alphabet,
    CapacityError,
    DomainError,
    InducedMeasure,
    MarkovMeasure,
    SeparabilityMeasure,
    SequenceRule,
    dbar_lower_blocks,
    dbar_upper_markov,
    enumerate_words,
    lift_order,
    projective_markov,
    projective_truncated,
    projective_upper_technical,
    vague_distance,
)
from shiftmetrics import _cycles

from conftest import perturbed_chain, random_chain

LOG32 = math.log(1.5)


def brute_truncated(a, b, N):
    best = 0.0
    for n in range(1, N + 1):
        for w in enumerate_words(a.alphabet, n):
            best = max(best, abs(a.log_mass(w) - b.log_mass(w)) / n)
    return best


# vague ---------------------------------------------------------------------


def test_vague_identical(ber_half, rng):
    enc = vague_distance(ber_half, ber_half, 10)
    assert enc.lo == 0.0 and enc.hi == 2.0**-9
    m = random_chain(rng, 2, 2)
    assert vague_distance(m, lift_order(m, 3), 8).lo == 0.0


def test_vague_bernoulli_oracle(ber_half, ber_third):
    N = 20
    enc = vague_distance(ber_half, ber_third, N)
    # closed form per length: sum over the number of ones j
    oracle = 0.0
    for n in range(1, N + 1):
        s = sum(math.comb(n, j) * abs(0.5**n - (1 / 3) ** j * (2 / 3) ** (n - j)) for j in range(n + 1))
        oracle += s / 2**n
    assert enc.lo <= oracle <= enc.hi
    assert enc.lo == pytest.approx(oracle, abs=1e-12)
    assert enc.width <= 2.0**-19 + 2 * enc.meta["rounding_pad"]
    assert enc.meta["rounding_pad"] < 1e-12


def test_vague_capacity(monkeypatch, ber_half):
    monkeypatch.setenv("SHIFTMETRICS_CAPACITY", "1000")
    with pytest.raises(CapacityError):
        vague_distance(ber_half, ber_half, 12)


# truncated projective ------------------------------------------------------


def test_truncated_examples(ber_half, ber_third):
    assert projective_truncated(ber_half, ber_half, 5).lo == 0.0
    assert projective_truncated(ber_half, ber_third, 1).lo == pytest.approx(LOG32, abs=1e-15)
    assert math.isinf(projective_truncated(ber_half, ber_third, 1).hi)


def test_truncated_methods_agree(rng):
    a = random_chain(rng, 2, 2)
    b = random_chain(rng, 2, 1)
    brute = brute_truncated(a, b, 8)
    assert projective_truncated(a, b, 8, method="dp").lo == pytest.approx(brute, abs=1e-12)
    assert projective_truncated(a, b, 8, method="enumerate").lo == pytest.approx(brute, abs=1e-12)


def test_truncated_monotone(rng):
    a, b = random_chain(rng, 3), random_chain(rng, 3)
    vals = [projective_truncated(a, b, N).lo for N in range(1, 12)]
    assert all(x <= y for x, y in zip(vals, vals[1:]))


def test_truncated_classes_match_enumeration():
    pairs = [
        (SequenceRule.constant(0), SequenceRule((1,), (0,))),
        (SequenceRule((0, 1, 1), (0, 1)), SequenceRule((0, 1, 0), (1,))),
        (SequenceRule((1,), (1, 0)), SequenceRule((1,), (1, 0))),
    ]
    for x, y in pairs:
        for alpha in (1.5, 3.0):
            a, b = SeparabilityMeasure(x, alpha), SeparabilityMeasure(y, alpha)
            for N in (1, 4, 11):
                assert projective_truncated(a, b, N).lo == pytest.approx(
                    projective_truncated(a, b, N, method="enumerate").lo, abs=1e-12)


def test_truncated_bad_method(ber_half):
    with pytest.raises(DomainError):
        projective_truncated(ber_half, ber_half, 3, method="magic")
    with pytest.raises(DomainError):
        projective_truncated(ber_half, ber_half, 3, method="classes")


# exact projective ----------------------------------------------------------


def test_karp_small_graph():
    pred, sym = _cycles.de_bruijn_pred(2, 2)
    w = np.array([[0.0, 1.0], [3.0, 0.0], [0.0, 0.0], [0.0, 0.0]])
    wp = w[pred, sym[:, None]]
    # cycle 01 -> 10 -> 01 has weights 3 (01 then 0) and 0 (10 then 1): mean 1.5
    assert _cycles.karp_max_mean(pred, wp) == pytest.approx(1.5)


def test_exact_identical(rng):
    m = random_chain(rng, 2, 2)
    enc = projective_markov(m, m)
    assert enc.lo == enc.hi == 0.0


def test_exact_bernoulli(ber_half, ber_third):
    enc = projective_markov(ber_half, ber_third, tol=1e-12)
    assert enc.lo <= LOG32 + 1e-15 and enc.hi >= LOG32 - 1e-15
    assert enc.width <= 1e-12
    assert enc.meta["lambda_star"] == pytest.approx(LOG32)


def test_exact_contains_long_truncation(rng):
    for k, order in ((2, 1), (2, 2), (3, 1)):
        for _ in range(5):
            a = random_chain(rng, k, order)
            b = perturbed_chain(rng, a, 0.5)
            enc = projective_markov(a, b)
            assert enc.meta["converged"]
            assert enc.width <= 1e-9
            lower = projective_truncated(a, b, 400).lo
            assert lower <= enc.hi
            assert lower >= enc.lo - 1e-2  # finite words approach rho at rate O(1/n)


def test_exact_witness_cycle(rng):
    for _ in range(10):
        a, b = random_chain(rng, 2, 2), random_chain(rng, 2, 2)
        enc = projective_markov(a, b)
        for cert in enc.meta["certificates"]:
            assert cert.cycle, "a critical cycle must exist"
            assert cert.cycle_mean == pytest.approx(cert.lambda_star, abs=1e-12 * (1 + abs(cert.lambda_star)))
            assert cert.cycle[0] == min(cert.cycle)


def test_exact_witness_periodic_word(rng):
    a, b = random_chain(rng, 2, 1), random_chain(rng, 2, 1)
    enc = projective_markov(a, b)
    cycle = enc.meta["cycle"]
    sign = enc.meta["sign"]
    n_rep = 2000
    symbols = [c % 2 for c in cycle] * n_rep
    w = BINARY.word("".join(map(str, symbols)))
    r = sign * (a.log_mass(w) - b.log_mass(w)) / len(w)
    assert abs(r - enc.meta["lambda_star"]) <= 5.0 / len(w)


def test_exact_symmetric(rng):
    a, b = random_chain(rng, 3), random_chain(rng, 3)
    e1, e2 = projective_markov(a, b), projective_markov(b, a)
    assert e1.lo == pytest.approx(e2.lo, abs=1e-12) and e1.hi == pytest.approx(e2.hi, abs=1e-12)


def test_exact_lift_invariance(rng):
    a, b = random_chain(rng, 2, 1), random_chain(rng, 2, 2)
    e1 = projective_markov(a, b)
    e2 = projective_markov(lift_order(a, 3), lift_order(b, 3))
    assert e1.lo == pytest.approx(e2.lo, abs=1e-9)


def test_exact_nonstationary_inputs():
    a = MarkovMeasure.from_probs(BINARY, [0.9, 0.1], [[0.6, 0.4], [0.3, 0.7]])
    b = MarkovMeasure.from_probs(BINARY, [0.2, 0.8], [[0.6, 0.4], [0.3, 0.7]])
    enc = projective_markov(a, b)
    # only the first symbol differs, so the sup is attained at n = 1
    assert enc.lo == pytest.approx(math.log(0.8 / 0.1), abs=1e-12)
    assert enc.width <= 1e-9


def test_exact_iteration_cap_returns_enclosure(rng):
    a, b = random_chain(rng, 2, 2), random_chain(rng, 2, 2)
    enc = projective_markov(a, b, tol=1e-300, max_steps=5)
    full = projective_markov(a, b)
    assert enc.meta["converged"] is False
    assert enc.lo <= full.hi and enc.hi >= full.lo


# technical bound -----------------------------------------------------------


def test_technical_examples(ber_half, ber_third, rng):
    assert projective_upper_technical(ber_half, ber_half).hi == 0.0
    assert projective_upper_technical(ber_half, ber_third).hi == pytest.approx(2 * LOG32)
    for _ in range(20):
        a, b = random_chain(rng), random_chain(rng)
        assert projective_markov(a, b).hi <= projective_upper_technical(a, b).hi


def test_technical_needs_stationary():
    a = MarkovMeasure.from_probs(BINARY, [0.9, 0.1], [[0.6, 0.4], [0.3, 0.7]])
    with pytest.raises(DomainError):
        projective_upper_technical(a, a)


# d-bar ---------------------------------------------------------------------


def test_dbar_bernoulli_pinned(ber_half, ber_third):
    up = dbar_upper_markov(ber_half, ber_third).hi
    low = dbar_lower_blocks(ber_half, ber_third, 1).lo
    assert low == pytest.approx(1 / 6, abs=1e-15)
    assert up == pytest.approx(1 / 6, abs=1e-12)


def test_dbar_identical(rng):
    m = random_chain(rng, 3)
    assert dbar_upper_markov(m, m).hi < 1e-12
    assert dbar_lower_blocks(m, m, 3).lo == 0.0


def test_dbar_upper_beats_independent(rng):
    for _ in range(10):
        a, b = random_chain(rng), random_chain(rng)
        enc = dbar_upper_markov(a, b)
        assert enc.hi <= enc.meta["candidates"]["independent"] + 1e-12
        assert enc.lo <= enc.hi


def test_dbar_sandwich_blocks(rng):
    for _ in range(10):
        a, b = random_chain(rng, 2, 2), random_chain(rng, 2, 1)
        up = dbar_upper_markov(a, b).hi
        for m in (1, 2, 3, 5):
            assert dbar_lower_blocks(a, b, m).lo <= up + 1e-12


def test_dbar_four_letters(rng):
    a, b = random_chain(rng, 4), random_chain(rng, 4)
    enc = dbar_upper_markov(a, b)
    assert dbar_lower_blocks(a, b, 2).lo <= enc.hi <= enc.meta["candidates"]["independent"] + 1e-12


def test_dbar_order_one_coupling_of_iid_is_tv(rng):
    p = rng.dirichlet(np.ones(3))
    q = rng.dirichlet(np.ones(3))
    alph = Alphabet("abc")
    up = dbar_upper_markov(MarkovMeasure.iid(alph, p), MarkovMeasure.iid(alph, q)).hi
    assert up == pytest.approx(0.5 * np.abs(p - q).sum(), abs=1e-12)


def test_dbar_requires_stationary():
    a = MarkovMeasure.from_probs(BINARY, [0.9, 0.1], [[0.6, 0.4], [0.3, 0.7]])
    with pytest.raises(DomainError):
        dbar_upper_markov(a, a)
