import math

import numpy as np
import pytest

from recipz.models.ergm import ErgmParams, ergm_logZ_bruteforce
from recipz.models.ising import IsingParams, ising_logZ_bruteforce, sample_tau_params
from recipz.weights import (
    AnnealingSchedule,
    BatchedSource,
    ErgmAIS,
    FiniteImportanceSource,
    IsingAIS,
    SupportError,
    ais_weight,
    batched_weight,
    simple_is_weight,
    two_point_source,
)


def mean_and_se(lw, log_z):
    w = np.exp(np.asarray(lw) - log_z)
    return w.mean(), w.std(ddof=1) / math.sqrt(w.size)


def test_schedule_validation():
    with pytest.raises(ValueError):
        AnnealingSchedule((0.0, 0.5))
    with pytest.raises(ValueError):
        AnnealingSchedule((0.0, 0.5, 0.5, 1.0))
    with pytest.raises(ValueError):
        AnnealingSchedule((1.0,))
    s = AnnealingSchedule.linear(10)
    assert s.n_levels == 10
    assert s.betas[0] == 0.0 and s.betas[-1] == 1.0


def test_two_point_source():
    src = two_point_source()
    assert src.log_z == pytest.approx(math.log(3))
    np.testing.assert_allclose(np.exp(src.state_weights()), [2.0, 4.0])
    lw = src.draw(np.random.default_rng(0), 100_000)
    assert set(np.round(np.exp(lw), 12)) == {2.0, 4.0}
    m, se = mean_and_se(lw, src.log_z)
    assert abs(m - 1) < 4 * se


def test_finite_source_refuses_zero_probability_draws():
    src = FiniteImportanceSource(np.log([1.0, 1.0]), [1.0, 0.0])
    assert np.all(src.draw(np.random.default_rng(0), 1000) == 0.0)
    with pytest.raises(ValueError):
        FiniteImportanceSource(np.log([1.0, 1.0]), [0.7, 0.7])


def test_simple_is_weight_support_error():
    with pytest.raises(SupportError):
        simple_is_weight(lambda x: 0.0, lambda rng: 1, lambda x: -math.inf, np.random.default_rng(0))


def test_reference_ais_unbiased_on_finite_space():
    log_p = np.log([1.0, 5.0, 0.5, 2.0])
    schedule = AnnealingSchedule.linear(4)

    def kernel(x, b, rng):
        p = np.exp(b * log_p)
        return int(rng.choice(4, p=p / p.sum()))

    rng = np.random.default_rng(1)
    lw = [ais_weight(lambda x: log_p[x], lambda r: int(r.integers(4)), math.log(4), schedule, kernel, rng)
          for _ in range(20_000)]
    m, se = mean_and_se(lw, math.log(np.exp(log_p).sum()))
    assert abs(m - 1) < 4 * se


def test_ising_ais_zero_params_exact():
    p = IsingParams.homogeneous(3, 4, 0.0, 0.0)
    lw = IsingAIS(p, AnnealingSchedule.linear(10)).draw(np.random.default_rng(0), 50)
    assert np.all(lw == 12 * math.log(2))


def test_ising_ais_unbiased_small_lattice():
    p = sample_tau_params(2, 3, 0.6, np.random.default_rng(2))
    lw = IsingAIS(p, AnnealingSchedule.linear(5)).draw(np.random.default_rng(3), 100_000)
    m, se = mean_and_se(lw, ising_logZ_bruteforce(p))
    assert abs(m - 1) < 4 * se


def test_ising_ais_single_level_is_plain_importance_sampling():
    p = sample_tau_params(2, 2, 0.5, np.random.default_rng(4))
    lw = IsingAIS(p, AnnealingSchedule.linear(1)).draw(np.random.default_rng(5), 100_000)
    m, se = mean_and_se(lw, ising_logZ_bruteforce(p))
    assert abs(m - 1) < 4 * se


def test_ergm_ais_zero_params_exact():
    lw = ErgmAIS(ErgmParams(0.0, 0.0), 5, AnnealingSchedule.linear(10)).draw(np.random.default_rng(0), 20)
    assert np.all(lw == 10 * math.log(2))


def test_ergm_ais_unbiased():
    p = ErgmParams(0.4, -0.6)
    lw = ErgmAIS(p, 5, AnnealingSchedule.linear(8)).draw(np.random.default_rng(6), 50_000)
    m, se = mean_and_se(lw, ergm_logZ_bruteforce(p, 5))
    assert abs(m - 1) < 4 * se


def test_batched_source_identical_weights_bit_exact():
    p = IsingParams.homogeneous(10, 30, 0.0, 0.0)
    src = BatchedSource(IsingAIS(p, AnnealingSchedule.linear(10)), 10)
    lw = src.draw(np.random.default_rng(0), 5)
    assert np.all(lw == 300 * math.log(2))


def test_batched_source_is_mean_of_raw_draws():
    raw = two_point_source()
    src = BatchedSource(raw, 4)
    lw = src.draw(np.random.default_rng(7), 3)
    rlw = raw.draw(np.random.default_rng(7), 12).reshape(3, 4)
    np.testing.assert_allclose(np.exp(lw), np.exp(rlw).mean(axis=1), rtol=1e-14)
    assert batched_weight(raw, 4, np.random.default_rng(7)) == pytest.approx(lw[0], rel=1e-14)


def test_batched_source_rejects_bad_size():
    with pytest.raises(ValueError):
        BatchedSource(two_point_source(), 0)
