"""Estimator summaries and trace diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .numerics import SignedLogValue, ZERO, slv_add, slv_scale
from .pseudo_marginal import PmTrace

__all__ = ["EstimatorSummary", "summarize", "autocorrelation", "signed_series", "batch_means_se"]

SUMMARY_COLUMNS = ("estimator", "tau", "n_trials", "rel_std", "frac_positive", "mean_coupled_at")


@dataclass(frozen=True)
class EstimatorSummary:
    n_trials: int
    mean: SignedLogValue
    rel_std: float
    frac_positive: float
    mean_coupled_at: Optional[float] = None

    def row(self, estimator: str, tau) -> dict:
        return {"estimator": estimator, "tau": tau, "n_trials": self.n_trials,
                "rel_std": self.rel_std, "frac_positive": self.frac_positive,
                "mean_coupled_at": "" if self.mean_coupled_at is None else self.mean_coupled_at}


def _split(estimates):
    if isinstance(estimates, tuple) and len(estimates) == 2 and np.ndim(estimates[0]) == 1:
        signs, logs = (np.asarray(a, dtype=float) for a in estimates)
    else:
        signs = np.array([e.sign for e in estimates], dtype=float)
        logs = np.array([e.log_mag if e.sign != 0 else 0.0 for e in estimates], dtype=float)
    logs = np.where(signs == 0, 0.0, logs)
    return signs, logs


def summarize(estimates, true_log_inv_z: Optional[float] = None,
              coupled_at: Optional[Sequence[int]] = None) -> EstimatorSummary:
    """Relative RMSE (or std/mean without an oracle) and sign statistics.

    ``estimates`` is a sequence of :class:`SignedLogValue` or a pair of
    arrays ``(signs, log_mags)``.  Values are decoded relative to a shared
    offset (the oracle's ``log(1/Z)``, else the largest magnitude) so that
    moments stay representable.
    """
    signs, logs = _split(estimates)
    n = signs.size
    if n == 0:
        raise ValueError("cannot summarise an empty set of estimates")
    nz = signs != 0
    offset = true_log_inv_z if true_log_inv_z is not None else (float(logs[nz].max()) if nz.any() else 0.0)
    with np.errstate(over="ignore"):
        v = signs * np.exp(logs - offset)
    if true_log_inv_z is not None:
        rel_std = float(np.sqrt(np.mean((v - 1.0) ** 2)))
    else:
        mu = v.mean()
        rel_std = float(np.sqrt(np.mean((v - mu) ** 2)) / mu) if mu != 0 else math.inf
    total = ZERO
    for s, l in zip(signs, logs):
        if s != 0:
            total = slv_add(total, SignedLogValue(int(s), float(l)))
    mean = slv_scale(total, -math.log(n)) if total.sign != 0 else ZERO
    mca = None
    if coupled_at is not None:
        c = np.asarray(coupled_at, dtype=float)
        c = c[c > 0]
        mca = float(c.mean()) if c.size else None
    return EstimatorSummary(n, mean, rel_std, float(np.mean(signs > 0)), mca)


def autocorrelation(series, max_lag: int) -> np.ndarray:
    """Biased (1/n) autocorrelation estimate for lags ``0..max_lag``."""
    x = np.asarray(series, dtype=float)
    n = x.size
    if n <= max_lag:
        raise ValueError(f"series of length {n} too short for max_lag {max_lag}")
    d = x - x.mean()
    c0 = np.dot(d, d) / n
    if c0 == 0:
        raise ValueError("autocorrelation of a constant series is undefined")
    return np.array([np.dot(d[: n - k], d[k:]) / n / c0 for k in range(max_lag + 1)])


def signed_series(trace: PmTrace, component: int) -> np.ndarray:
    """``sigma_i * theta_i[component]``, the quantity whose ACF is plotted."""
    if len(trace) == 0:
        return np.empty(0)
    if not 0 <= component < trace.dim:
        raise IndexError(f"component {component} outside 0..{trace.dim - 1}")
    return trace.sigma.astype(float) * trace.theta[:, component]


def batch_means_se(x, n_batches: int = 50) -> float:
    """Monte Carlo standard error of ``mean(x)`` for a correlated series."""
    x = np.asarray(x, dtype=float)
    b = x.size // n_batches
    if b < 1:
        raise ValueError("series too short for the requested number of batches")
    means = x[: b * n_batches].reshape(n_batches, b).mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(n_batches))


def sign_corrected_se(trace: PmTrace, component: int, n_batches: int = 50) -> float:
    """Batch-means standard error of the sign-corrected mean (delta method)."""
    s = trace.sigma.astype(float)
    th = trace.theta[:, component]
    sbar = s.mean()
    r = np.sum(th * s) / np.sum(s)
    return batch_means_se((th - r) * s / sbar, n_batches)
