"""Acceptance checks shared by ``recipz selftest`` and the test suite.

Each ``check_*`` function runs one criterion at its stated size and
tolerance and returns a :class:`CheckResult`; none of them raise on a
failed criterion.
"""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .config import default_config, merge, ExperimentConfig
from .diagnostics import sign_corrected_se
from .experiments import estimate_trials, run_estimate, run_pm
from .models.ergm import ErgmParams, ergm_logZ_bruteforce
from .models.ising import IsingParams, ising_logZ_bruteforce, ising_logZ_transfer, sample_tau_params
from .pseudo_marginal import UniformBoxPrior, sign_corrected_expectation
from .roulette import StoppingRule, fce_batch, iae_path, rbbce_bruteforce_oracle, rbbce_path
from .seeding import substream
from .weights import AnnealingSchedule, ErgmAIS, IsingAIS, two_point_source

RULE = StoppingRule(1.1)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0
    data: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail} ({self.seconds:.1f}s)"


def _timed(name: str, fn: Callable[[], tuple]) -> CheckResult:
    t0 = time.perf_counter()
    passed, detail, data = fn()
    return CheckResult(name, bool(passed), detail, time.perf_counter() - t0, data)


def _mean_se(x) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def _two_point_trials(n_trials: int, seed: int, burn_in: int = 0) -> dict:
    """All three estimators on the two-point model, ``n_trials`` full randomisations."""
    res = estimate_trials(two_point_source(), RULE, n_trials, seed, key=(burn_in,),
                          burn_in=burn_in, chunk=5000)
    return res


# ---------------------------------------------------------------------------


def check_unbiasedness(n_trials: int = 100_000, seed: int = 1) -> CheckResult:
    def run():
        res = _two_point_trials(n_trials, seed)
        parts, ok, data = [], True, {}
        for k in ("iae", "fce", "rbbce"):
            v = res[k].signs * np.exp(res[k].log_mags)
            m, se = _mean_se(v)
            good = abs(m - 1 / 3) <= 3 * se
            ok &= good
            parts.append(f"{k} {m:.5f}+-{se:.5f}")
            data[k] = (m, se)
        return ok, "mean vs 1/3: " + ", ".join(parts), data
    return _timed("1 unbiasedness on the two-point model", run)


def check_rbbce_oracle(n_streams: int = 1000, max_len: int = 7, seed: int = 2) -> CheckResult:
    def run():
        rng = substream(seed, "check-rbbce-oracle")
        worst = 0.0
        for _ in range(n_streams):
            n = int(rng.integers(1, max_len + 1))
            lw = rng.normal(0.0, 1.5, n)
            logy, _ = rbbce_path(lw)
            for i in range(n):
                worst = max(worst, abs(math.exp(logy[i]) - rbbce_bruteforce_oracle(lw, i)))
        return worst <= 1e-10, f"max |Y_rb - oracle| = {worst:.2e} (tol 1e-10)", {"worst": worst}
    return _timed("2 RBBCE matches exact enumeration", run)


def check_rbbce_monotone(n_streams: int = 10_000, seed: int = 3) -> CheckResult:
    def run():
        rng = substream(seed, "check-rbbce-monotone")
        worst = -math.inf
        for _ in range(n_streams):
            n = int(rng.integers(2, 60))
            logy, _ = rbbce_path(rng.normal(0.0, 2.0, n))
            y = np.exp(logy)
            worst = max(worst, float(np.max(y[1:] - y[:-1])))
        return worst <= 1e-12, f"max Y_i - Y_(i-1) = {worst:.2e} (tol 1e-12)", {"worst": worst}
    return _timed("3 RBBCE path is non-increasing", run)


def check_coupling_bound(n_trials: int = 100_000, horizon: int = 20, seed: int = 4) -> CheckResult:
    def run():
        rng = substream(seed, "check-coupling")
        lw = rng.normal(0.0, 1.0, n_trials * (horizon + 1))
        us = rng.random(n_trials * horizon)
        _, _, c = fce_batch(lw, np.full(n_trials, horizon + 1), us, RULE)
        ok, worst = True, math.inf
        for i in range(2, horizon + 1):
            hit = (c >= 1) & (c <= i)
            p = hit.mean()
            sig = math.sqrt(p * (1 - p) / n_trials)
            margin = p - (1 - 2 / (i + 1) - 3 * sig)
            worst = min(worst, margin)
            ok &= margin >= 0
        return ok, f"min margin over i=2..{horizon}: {worst:.4f}", {"margin": worst}
    return _timed("4 FCE coupling probability bound", run)


def check_burnin_positivity(n_trials: int = 100_000, burn_ins=(4, 9, 19), seed: int = 5) -> CheckResult:
    def run():
        ok, parts = True, []
        for T in burn_ins:
            res = estimate_trials(two_point_source(), RULE, n_trials, seed, key=(T,),
                                  kinds=("fce",), burn_in=T, chunk=5000)["fce"]
            p = float(np.mean(res.signs >= 0))
            sig = math.sqrt(p * (1 - p) / n_trials)
            bound = 1 - 2 / (T + 1) - 3 * sig
            ok &= p >= bound
            parts.append(f"T={T}: {p:.4f} >= {bound:.4f}")
        return ok, "; ".join(parts), {}
    return _timed("5 FCE burn-in positivity", run)


def check_linear_work(ns=(10, 100, 1000), n_trials: int = 1000, seed: int = 6) -> CheckResult:
    def run():
        rng = substream(seed, "check-work")
        ok, parts = True, []
        for n in ns:
            work = np.array([rbbce_path(rng.normal(0.0, 1.0, n + 1))[1] for _ in range(n_trials)])
            ratio = work.mean() / n
            ok &= ratio <= 3
            parts.append(f"N={n}: {ratio:.3f}")
        return ok, "mean work / N: " + ", ".join(parts) + " (<= 3)", {}
    return _timed("6 RBBCE expected work is O(N)", run)


def check_iae_divergence(n_trials: int = 100_000, horizon: int = 50, seed: int = 7) -> CheckResult:
    def run():
        rng = substream(seed, "check-iae")
        lw = two_point_source().draw(rng, n_trials * (horizon + 1)).reshape(n_trials, horizon + 1)
        y = np.exp(np.array([iae_path(row) for row in lw]))
        d = np.abs(np.diff(y, axis=1))
        ok, worst = True, math.inf
        for i in range(2, horizon + 1):
            m, se = _mean_se(d[:, i - 1])
            margin = m - (1 / (36 * i + 48) - 3 * se)
            worst = min(worst, margin)
            ok &= margin >= 0
        return ok, f"min margin over i=2..{horizon}: {worst:.5f}", {"margin": worst}
    return _timed("7 IAE differences decay too slowly", run)


def check_exact_oracles(n_lattices: int = 200, n_weights: int = 100_000, seed: int = 8) -> CheckResult:
    def run():
        rng = substream(seed, "check-oracles")
        worst = 0.0
        for k in range(n_lattices):
            rows = int(rng.integers(1, 5))
            cols = int(rng.integers(1, 16 // rows + 1))
            p = sample_tau_params(rows, cols, float(rng.uniform(0, 1.5)), rng)
            worst = max(worst, abs(ising_logZ_transfer(p) - ising_logZ_bruteforce(p)))
        ok = worst <= 1e-9
        parts = [f"transfer vs brute force max diff {worst:.1e}"]
        sched = AnnealingSchedule.linear(10)
        ip = sample_tau_params(2, 2, 0.5, substream(seed, "check-oracles-ising"))
        ep = ErgmParams(-0.5, 0.3)
        for label, src, log_z in (
            ("2x2 Ising", IsingAIS(ip, sched), ising_logZ_bruteforce(ip)),
            ("4-node ERGM", ErgmAIS(ep, 4, sched), ergm_logZ_bruteforce(ep, 4)),
        ):
            w = np.exp(src.draw(substream(seed, "check-oracles-ais", len(parts)), n_weights) - log_z)
            m, se = _mean_se(w)
            good = abs(m - 1) <= 3 * se
            ok &= good
            parts.append(f"{label} mean w/Z {m:.4f}+-{se:.4f}")
        return ok, "; ".join(parts), {"worst": worst}
    return _timed("8 exact partition-function oracles agree", run)


def check_tau_sweep(taus=(0.2, 0.5, 0.8), n_trials: int = 2000, seed: int = 0) -> CheckResult:
    def run():
        d = merge(default_config("estimate").to_dict(),
                  {"model": {"taus": list(taus)}, "run": {"n_trials": n_trials, "seed": seed}})
        results = run_estimate(ExperimentConfig.from_dict(d))
        ok, parts = True, []
        for r in results:
            s = r.summaries
            fp = {k: s[k].frac_positive for k in s}
            rs = {k: s[k].rel_std for k in s}
            good = fp["rbbce"] >= fp["iae"] and fp["fce"] >= fp["iae"]
            if r.tau in (0.2, 0.5):
                good &= rs["rbbce"] <= rs["iae"]
            ok &= good
            parts.append(f"tau={r.tau}: pos I/F/R {fp['iae']:.4f}/{fp['fce']:.4f}/{fp['rbbce']:.4f}, "
                         f"relstd I/R {rs['iae']:.3g}/{rs['rbbce']:.3g}")
        return ok, "; ".join(parts), {}
    return _timed("9 tau sweep ordering on 10x30", run)


def ising_grid_posterior(rows: int, cols: int, s1: float, s2: float, prior: UniformBoxPrior,
                         n_alpha: int = 201, n_beta: int = 81) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and SD of ``(alpha, beta)`` by quadrature on the prior box."""
    a = np.linspace(prior.low[0], prior.high[0], n_alpha)
    b = np.linspace(prior.low[1], prior.high[1], n_beta)
    logp = np.empty((n_alpha, n_beta))
    for i, ai in enumerate(a):
        for j, bj in enumerate(b):
            logp[i, j] = ai * s1 + bj * s2 - ising_logZ_transfer(IsingParams.homogeneous(rows, cols, ai, bj))
    p = np.exp(logp - logp.max())
    p /= p.sum()
    ma, mb = (p.sum(1) * a).sum(), (p.sum(0) * b).sum()
    sa = math.sqrt((p.sum(1) * (a - ma) ** 2).sum())
    sb = math.sqrt((p.sum(0) * (b - mb) ** 2).sum())
    return np.array([ma, mb]), np.array([sa, sb])


def check_pm_small(n_iters: int = 10_000, seed: int = 0) -> CheckResult:
    def run():
        d = merge(default_config("pm-ising").to_dict(),
                  {"model": {"rows": 4, "cols": 4}, "run": {"n_iters": n_iters, "seed": seed}})
        cfg = ExperimentConfig.from_dict(d)
        res = run_pm(cfg, "pm-ising", kinds=["exact", "rbbce"])
        data = res["data"]
        prior = UniformBoxPrior(tuple(cfg.pm.prior_low), tuple(cfg.pm.prior_high))
        qm, qs = ising_grid_posterior(4, 4, data["sum_spins"], data["sum_neighbour_products"], prior)
        means, ses = {}, {}
        for k, tr in res["traces"].items():
            means[k] = np.asarray(sign_corrected_expectation(tr))
            ses[k] = np.array([sign_corrected_se(tr, c) for c in range(2)])
        diff = np.abs(means["exact"] - means["rbbce"])
        tol = 3 * np.sqrt(ses["exact"] ** 2 + ses["rbbce"] ** 2)
        agree = bool(np.all(diff <= tol))
        inside = all(np.all(m >= prior.low) and np.all(m <= prior.high) for m in means.values())
        near = all(np.all(np.abs(m - np.array([0.1, 0.1])) <= 3 * qs) for m in means.values())
        ok = agree and inside and near
        detail = (f"exact {np.round(means['exact'], 4).tolist()} rbbce {np.round(means['rbbce'], 4).tolist()} "
                  f"|diff| {np.round(diff, 4).tolist()} <= {np.round(tol, 4).tolist()}; "
                  f"quadrature mean {np.round(qm, 4).tolist()} sd {np.round(qs, 4).tolist()}; "
                  f"inside prior {inside}, within 3 sd of (0.1, 0.1) {near}")
        return ok, detail, {"means": means, "ses": ses}
    return _timed("10 pseudo-marginal chain matches exact MH on 4x4", run)


def check_pm_ordering(n_iters: int = 5000, seed: int = 0) -> CheckResult:
    def run():
        d = merge(default_config("pm-ising").to_dict(),
                  {"model": {"rows": 10, "cols": 10}, "run": {"n_iters": n_iters, "seed": seed}})
        res = run_pm(ExperimentConfig.from_dict(d), "pm-ising", kinds=["rbbce", "fce", "iae"])
        fp = {k: s["positive_fraction"] for k, s in res["summaries"].items()}
        ok = fp["rbbce"] >= fp["fce"] >= fp["iae"]
        return ok, f"positive fraction R/F/I {fp['rbbce']:.4f}/{fp['fce']:.4f}/{fp['iae']:.4f}", {"fp": fp}
    return _timed("11 desk substitute: positive-fraction ordering on 10x10", run)


REFERENCE_FRACTIONS = {"pm-ising": {"rbbce": 0.99924, "fce": 0.97597, "iae": 0.96538},
             "pm-ergm": {"rbbce": 0.99890, "fce": 0.98680, "iae": 0.98442}}


def check_full_scale(command: str, seed: int = 0) -> CheckResult:
    def run():
        cfg = default_config(command, full_scale=True)
        d = merge(cfg.to_dict(), {"run": {"seed": seed}})
        res = run_pm(ExperimentConfig.from_dict(d), command, kinds=["rbbce", "fce", "iae"])
        ok, parts = True, []
        for k, target in REFERENCE_FRACTIONS[command].items():
            fp = res["summaries"][k]["positive_fraction"]
            ok &= abs(fp - target) <= 0.005
            parts.append(f"{k} {fp:.5f} vs {target:.5f}")
        return ok, "; ".join(parts) + " (tol 0.005)", {}
    return _timed(f"11 full-scale {command} positive fractions", run)


FAST = (check_unbiasedness, check_rbbce_oracle, check_rbbce_monotone, check_coupling_bound,
        check_burnin_positivity, check_linear_work, check_iae_divergence, check_exact_oracles)
SLOW = (check_tau_sweep, check_pm_small, check_pm_ordering)


def run_checks(slow: bool = False) -> list[CheckResult]:
    fns = FAST + (SLOW if slow else ())
    return [fn() for fn in fns]


def full_scale_enabled() -> bool:
    return os.environ.get("RECIPZ_FULL_SCALE", "") not in ("", "0")
