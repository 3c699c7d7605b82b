import math

import numpy as np
import pytest

from recipz.diagnostics import (
    autocorrelation,
    batch_means_se,
    sign_corrected_se,
    signed_series,
    summarize,
)
from recipz.numerics import SignedLogValue
from recipz.pseudo_marginal import PmTrace


def test_summarize_against_oracle():
    log_inv_z = -700.0  # far outside float range once decoded naively
    rel = np.array([1.2, 0.8, -0.1, 1.1])
    signs = np.sign(rel)
    logs = log_inv_z + np.log(np.abs(rel))
    s = summarize((signs, logs), true_log_inv_z=log_inv_z, coupled_at=[2, 0, 3, 1])
    assert s.n_trials == 4
    assert s.rel_std == pytest.approx(math.sqrt(np.mean((rel - 1) ** 2)), rel=1e-12)
    assert s.frac_positive == 0.75
    assert s.mean_coupled_at == 2.0
    assert s.mean.sign == 1
    assert s.mean.log_mag == pytest.approx(log_inv_z + math.log(rel.mean()), rel=1e-12)


def test_summarize_without_oracle_uses_std_over_mean():
    vals = [SignedLogValue.from_float(v) for v in (1.0, 2.0, 3.0)]
    s = summarize(vals)
    assert s.rel_std == pytest.approx(np.std([1, 2, 3]) / 2.0, rel=1e-12)
    assert s.mean_coupled_at is None


def test_summarize_handles_zero_estimates():
    s = summarize((np.array([0.0, 1.0]), np.array([-np.inf, 0.0])), true_log_inv_z=0.0)
    assert s.frac_positive == 0.5
    assert s.rel_std == pytest.approx(math.sqrt(0.5))


def test_summarize_empty():
    with pytest.raises(ValueError):
        summarize([])


def test_summary_row_columns():
    s = summarize((np.ones(2), np.zeros(2)), 0.0)
    assert list(s.row("rbbce", 0.5)) == ["estimator", "tau", "n_trials", "rel_std", "frac_positive",
                                         "mean_coupled_at"]


def test_autocorrelation_ar1():
    rng = np.random.default_rng(0)
    phi = 0.7
    x = np.empty(100_000)
    x[0] = 0.0
    e = rng.normal(size=x.size)
    for t in range(1, x.size):
        x[t] = phi * x[t - 1] + e[t]
    acf = autocorrelation(x, 3)
    np.testing.assert_allclose(acf, [1, phi, phi ** 2, phi ** 3], atol=0.02)


def test_autocorrelation_errors():
    with pytest.raises(ValueError):
        autocorrelation(np.ones(10), 2)
    with pytest.raises(ValueError):
        autocorrelation(np.arange(3.0), 5)


def test_signed_series():
    tr = PmTrace(np.array([[0.1, 0.2], [0.3, 0.4]]), np.array([1, -1], np.int8), np.zeros(2), np.ones(2, bool))
    np.testing.assert_allclose(signed_series(tr, 1), [0.2, -0.4])
    with pytest.raises(IndexError):
        signed_series(tr, 2)


def test_batch_means_se_iid():
    x = np.random.default_rng(1).normal(size=50_000)
    assert batch_means_se(x) == pytest.approx(1 / math.sqrt(x.size), rel=0.3)
    with pytest.raises(ValueError):
        batch_means_se(np.ones(10), 50)


def test_sign_corrected_se_reduces_to_batch_means_when_positive():
    th = np.random.default_rng(2).normal(size=(5000, 1))
    tr = PmTrace(th, np.ones(5000, np.int8), np.zeros(5000), np.ones(5000, bool))
    assert sign_corrected_se(tr, 0) == pytest.approx(batch_means_se(th[:, 0]), rel=1e-12)
