import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from recipz.numerics import SignedLogValue
from recipz.roulette import (
    StoppingRule,
    fce_batch,
    fce_estimate,
    fce_estimate_burnin,
    forward_chain_expectation,
    forward_chains,
    iae_batch,
    iae_estimate,
    iae_path,
    rbbce_batch,
    rbbce_bruteforce_oracle,
    rbbce_estimate,
    rbbce_path,
    roulette_sum,
    sample_stopping_time,
    survival,
)

RULE = StoppingRule()
log_streams = st.lists(st.floats(min_value=-4, max_value=4), min_size=1, max_size=8)


def val(est):
    return est.value.to_float()


# --- stopping rule ---------------------------------------------------------


def test_survival_values():
    assert survival(RULE, 1) == 1.0
    assert survival(RULE, 3) == pytest.approx(0.2986528, abs=1e-7)
    assert survival(RULE, 4) == pytest.approx(0.2176376, abs=1e-7)
    with pytest.raises(ValueError):
        survival(RULE, 0)


def test_sample_stopping_time_inverse_cdf():
    assert sample_stopping_time(RULE, 0.01) == 65
    assert sample_stopping_time(RULE, 0.999) == 1
    for bad in (0.0, 1.0, -0.1):
        with pytest.raises(ValueError):
            sample_stopping_time(RULE, bad)


def test_stopping_time_distribution():
    n = RULE.sample_many(np.random.default_rng(0), 200_000)
    assert n.min() >= 1
    for k in (2, 5, 20):
        p = np.mean(n >= k)
        assert abs(p - k ** -1.1) < 4 * math.sqrt(p * (1 - p) / n.size)


def test_stopping_rule_rejects_bad_exponent():
    with pytest.raises(ValueError):
        StoppingRule(0.0)
    with pytest.raises(ValueError):
        StoppingRule(math.inf)


def test_roulette_sum_reweights_by_survival():
    d = [SignedLogValue.from_float(0.5), SignedLogValue.from_float(-0.25)]
    got = roulette_sum(SignedLogValue.from_float(1.0), d, RULE).to_float()
    assert got == pytest.approx(1 + 0.5 - 0.25 * 2 ** 1.1, rel=1e-14)


# --- worked examples ---------------------------------------------------------


def test_iae_two_weights():
    est = iae_estimate(np.log([2.0, 4.0]), RULE)
    assert val(est) == pytest.approx(1 / 3, rel=1e-14)


def test_iae_path_running_average():
    w = np.array([2.0, 4.0, 0.5, 8.0])
    expect = np.arange(1, 5) / np.cumsum(w)
    np.testing.assert_allclose(np.exp(iae_path(np.log(w))), expect, rtol=1e-14)


def test_fce_two_weights_accepting_step():
    est = fce_estimate(np.log([2.0, 4.0]), [0.3], RULE)
    # main chain moves to w=4, shadow stays at w=2: 1/2 + (1/4 - 1/2)
    assert val(est) == pytest.approx(0.25, rel=1e-14)


def test_fce_constant_weights_couple_at_two():
    est = fce_estimate(np.zeros(5), np.full(4, 0.5), RULE)
    assert est.coupled_at == 2
    assert val(est) == 1.0


def test_fce_rejecting_first_step_couples_immediately():
    est = fce_estimate(np.log([4.0, 2.0, 1.0]), [0.9, 0.9], RULE)
    assert est.coupled_at == 1
    assert val(est) == pytest.approx(0.25, rel=1e-14)


def test_rbbce_examples():
    logy, work = rbbce_path(np.log([4.0, 2.0]))
    np.testing.assert_allclose(np.exp(logy), [0.5, 0.375], rtol=1e-14)
    assert val(rbbce_estimate(np.log([4.0, 2.0]), RULE)) == pytest.approx(0.375, rel=1e-14)
    assert val(rbbce_estimate(np.log([2.0, 4.0]), RULE)) == pytest.approx(0.25, rel=1e-14)


def test_single_weight_stream_is_reciprocal():
    lw = np.array([math.log(5.0)])
    for est in (iae_estimate(lw, RULE), rbbce_estimate(lw, RULE), fce_estimate(lw, [], RULE)):
        assert val(est) == pytest.approx(0.2, rel=1e-15)


def test_input_validation():
    with pytest.raises(ValueError):
        iae_estimate(np.array([]), RULE)
    with pytest.raises(ValueError):
        rbbce_estimate(np.array([0.0, math.inf]), RULE)
    with pytest.raises(ValueError):
        fce_estimate(np.zeros(3), [0.5], RULE)
    with pytest.raises(ValueError):
        fce_estimate_burnin(np.zeros(3), [0.5, 0.5], RULE, 3)


# --- oracles and properties ----------------------------------------------------


@settings(max_examples=300, deadline=None)
@given(log_streams)
def test_rbbce_matches_enumeration_oracle(lw):
    logy, _ = rbbce_path(np.array(lw))
    for i in range(len(lw)):
        assert math.exp(logy[i]) == pytest.approx(rbbce_bruteforce_oracle(lw, i), rel=1e-10, abs=1e-12)


@settings(max_examples=300, deadline=None)
@given(st.lists(st.floats(min_value=-30, max_value=30), min_size=2, max_size=40))
def test_rbbce_path_non_increasing(lw):
    logy, work = rbbce_path(np.array(lw))
    assert np.all(np.diff(logy) <= 1e-12)
    assert 0 <= work <= len(lw) * len(lw)


def test_rbbce_ties_at_maximum():
    logy, _ = rbbce_path(np.zeros(6))
    np.testing.assert_array_equal(logy, np.zeros(6))
    logy, _ = rbbce_path(np.log([3.0, 3.0, 1.0, 3.0]))
    np.testing.assert_allclose(np.exp(logy), [rbbce_bruteforce_oracle(np.log([3.0, 3.0, 1.0, 3.0]), i)
                                              for i in range(4)], rtol=1e-12)


def test_forward_chain_expectation_small_case():
    # one step from w0=4 proposing w1=2: accept with probability 1/2
    assert forward_chain_expectation(np.log([4.0, 2.0])) == pytest.approx(0.5 * 0.5 + 0.5 * 0.25)


def test_fce_is_unbiased_over_uniforms_for_fixed_stream():
    """Average FCE over fresh uniforms equals the telescoped chain expectations."""
    lw = np.log([3.0, 1.0, 5.0, 0.5, 2.0])
    n = lw.size - 1
    exact = math.exp(-lw[0])
    for i in range(1, n + 1):
        main = forward_chain_expectation(lw[: i + 1])
        shadow = forward_chain_expectation(np.concatenate([lw[:1], lw[2: i + 1]]))
        exact += (main - shadow) / survival(RULE, i)
    rng = np.random.default_rng(11)
    trials = 200_000
    us = rng.random(trials * n)
    s, l, _ = fce_batch(np.tile(lw, trials), np.full(trials, n + 1), us, RULE)
    v = s * np.exp(l)
    assert abs(v.mean() - exact) < 4 * v.std() / math.sqrt(trials)


def test_forward_chains_shadow_skips_first_transition():
    main, shadow = forward_chains(np.log([1.0, 10.0, 0.1]), [0.5, 0.5])
    np.testing.assert_array_equal(main, [0, 1, 1])
    np.testing.assert_array_equal(shadow, [0, 0, 0])


def test_batch_kernels_match_single_calls():
    rng = np.random.default_rng(5)
    lengths = [1, 2, 5, 9]
    streams = [rng.normal(size=k) for k in lengths]
    uss = [rng.random(k - 1) for k in lengths]
    cat = np.concatenate(streams)
    s, l = iae_batch(cat, lengths, RULE)
    s2, l2, _ = rbbce_batch(cat, lengths, RULE)
    s3, l3, c3 = fce_batch(cat, lengths, np.concatenate(uss), RULE)
    for t, (lw, us) in enumerate(zip(streams, uss)):
        for (ss, ll), est in (((s, l), iae_estimate(lw, RULE)), ((s2, l2), rbbce_estimate(lw, RULE)),
                              ((s3, l3), fce_estimate(lw, us, RULE))):
            assert ss[t] * math.exp(ll[t]) == pytest.approx(val(est), rel=1e-14)
        assert (c3[t] or None) == fce_estimate(lw, us, RULE).coupled_at


def test_burn_in_zero_matches_plain_fce():
    rng = np.random.default_rng(9)
    lw, us = rng.normal(size=7), rng.random(6)
    assert fce_estimate_burnin(lw, us, RULE, 0) == fce_estimate(lw, us, RULE)


def test_burn_in_starts_roulette_at_chain_state():
    # constant weights: the chain is already coupled, S is the reciprocal weight
    est = fce_estimate_burnin(np.full(8, math.log(2.0)), np.full(7, 0.3), RULE, 3)
    assert est.n == 4
    assert val(est) == pytest.approx(0.5, rel=1e-15)


@pytest.mark.parametrize("kind", ["iae", "fce", "rbbce"])
def test_unbiased_on_two_point_weights(kind):
    """Mean over full randomisations of the two-point model is 1/3."""
    rng = np.random.default_rng(123)
    trials = 40_000
    n = RULE.sample_many(rng, trials)
    lw = np.log(np.where(rng.random(int((n + 1).sum())) < 0.5, 2.0, 4.0))
    if kind == "iae":
        s, l = iae_batch(lw, n + 1, RULE)
    elif kind == "rbbce":
        s, l, _ = rbbce_batch(lw, n + 1, RULE)
    else:
        s, l, _ = fce_batch(lw, n + 1, rng.random(int(n.sum())), RULE)
    v = s * np.exp(l)
    assert abs(v.mean() - 1 / 3) < 4 * v.std() / math.sqrt(trials)
