"""Sign-corrected pseudo-marginal Metropolis-Hastings.

The chain runs on pairs ``(theta, f_hat)`` where ``f_hat`` is an unbiased
but possibly negative estimate of ``p*(y | theta) pi(theta) / Z(theta)``.
Acceptance uses ``|f_hat|`` and every visited state records its sign, so
that posterior expectations are ``sum h(theta_i) s_i / sum s_i``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .numerics import SignedLogValue, ZERO, slv_add, slv_scale
from .roulette import (
    StoppingRule,
    fce_estimate_burnin,
    iae_estimate,
    rbbce_estimate,
)
from .weights import WeightSource

__all__ = [
    "UniformBoxPrior",
    "GaussianProposal",
    "RouletteInvZ",
    "ExactInvZ",
    "PmTarget",
    "PmState",
    "PmTrace",
    "acceptance_probability",
    "pm_step",
    "run_pm_chain",
    "sign_corrected_expectation",
    "positive_fraction",
]


@dataclass(frozen=True)
class UniformBoxPrior:
    low: tuple
    high: tuple

    def __post_init__(self):
        if len(self.low) != len(self.high) or any(h <= l for l, h in zip(self.low, self.high)):
            raise ValueError("prior box needs low < high in every coordinate")

    def log_density(self, theta) -> float:
        t = np.asarray(theta, dtype=float)
        if np.any(t < self.low) or np.any(t > self.high):
            return -math.inf
        return -float(np.sum(np.log(np.subtract(self.high, self.low))))

    @property
    def mean(self) -> np.ndarray:
        return (np.asarray(self.low, dtype=float) + np.asarray(self.high, dtype=float)) / 2


@dataclass(frozen=True)
class GaussianProposal:
    """Joint random-walk step with independent per-coordinate scales."""

    scales: tuple

    def sample(self, theta, rng) -> np.ndarray:
        t = np.asarray(theta, dtype=float)
        return t + np.asarray(self.scales, dtype=float) * rng.standard_normal(t.size)

    def log_density(self, to, frm) -> float:
        """``log t(to ; frm)``; degenerate zero-scale coordinates contribute nothing."""
        s = np.asarray(self.scales, dtype=float)
        d = np.asarray(to, dtype=float) - np.asarray(frm, dtype=float)
        nz = s > 0
        return float(np.sum(-0.5 * (d[nz] / s[nz]) ** 2 - np.log(s[nz]) - 0.5 * math.log(2 * math.pi)))


class RouletteInvZ:
    """``theta -> `` unbiased estimate of ``1/Z(theta)`` by roulette debiasing.

    Parameters
    ----------
    kind : one of ``"iae"``, ``"fce"``, ``"rbbce"``.
    make_source : callable ``theta -> WeightSource`` of (batched) log-weights.
    rule : truncation law.
    n_avg : independent roulette estimates averaged (linear domain) per call.
    burn_in : FCE only.
    """

    def __init__(self, kind: str, make_source: Callable[[np.ndarray], WeightSource],
                 rule: StoppingRule = StoppingRule(), n_avg: int = 1, burn_in: int = 0):
        if kind not in ("iae", "fce", "rbbce"):
            raise ValueError(f"unknown estimator {kind!r}")
        if n_avg < 1:
            raise ValueError("n_avg must be >= 1")
        self.kind = kind
        self.make_source = make_source
        self.rule = rule
        self.n_avg = n_avg
        self.burn_in = burn_in if kind == "fce" else 0

    def single(self, source: WeightSource, rng) -> SignedLogValue:
        n = self.rule.sample(rng)
        lw = source.draw(rng, n + 1 + self.burn_in)
        if self.kind == "iae":
            return iae_estimate(lw, self.rule).value
        if self.kind == "rbbce":
            return rbbce_estimate(lw, self.rule).value
        us = rng.random(n + self.burn_in)
        return fce_estimate_burnin(lw, us, self.rule, self.burn_in).value

    def __call__(self, theta, rng) -> SignedLogValue:
        source = self.make_source(np.asarray(theta, dtype=float))
        total = ZERO
        for _ in range(self.n_avg):
            total = slv_add(total, self.single(source, rng))
        return slv_scale(total, -math.log(self.n_avg)) if total.sign != 0 else ZERO


class ExactInvZ:
    """Plug-in of an exact ``log Z(theta)``; always positive, consumes no randomness."""

    kind = "exact"

    def __init__(self, log_z: Callable[[np.ndarray], float]):
        self.log_z = log_z

    def __call__(self, theta, rng) -> SignedLogValue:
        return SignedLogValue(1, -float(self.log_z(np.asarray(theta, dtype=float))))


@dataclass
class PmTarget:
    """Everything that defines ``f(theta)`` except the randomness."""

    log_lik_unnorm: Callable[[np.ndarray], float]
    prior: UniformBoxPrior
    inv_z: Callable

    def estimate(self, theta, rng) -> Optional[SignedLogValue]:
        """``f_hat(theta)``, or None when theta lies outside the prior support."""
        lp = self.prior.log_density(theta)
        if lp == -math.inf:
            return None
        iz = self.inv_z(theta, rng)
        if iz.sign == 0:
            return ZERO
        return SignedLogValue(iz.sign, self.log_lik_unnorm(theta) + lp + iz.log_mag)


@dataclass
class PmState:
    theta: np.ndarray
    f_hat: SignedLogValue

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)


@dataclass
class PmTrace:
    """Per-iteration record of a pseudo-marginal run."""

    theta: np.ndarray
    sigma: np.ndarray
    log_abs_f: np.ndarray
    accepted: np.ndarray
    n_zero_rejects: int = 0
    n_prior_rejects: int = 0

    def __len__(self):
        return int(self.sigma.size)

    @property
    def dim(self) -> int:
        return int(self.theta.shape[1]) if self.theta.ndim == 2 else 0

    @classmethod
    def empty(cls, dim: int) -> "PmTrace":
        return cls(np.empty((0, dim)), np.empty(0, np.int8), np.empty(0), np.empty(0, bool))

    def columns(self) -> list[str]:
        return ["iteration"] + [f"theta_{k + 1}" for k in range(self.dim)] + ["sigma", "log_abs_f", "accepted"]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.columns())
            for i in range(len(self)):
                w.writerow([i] + [repr(float(v)) for v in self.theta[i]]
                           + [int(self.sigma[i]), repr(float(self.log_abs_f[i])), int(self.accepted[i])])

    @classmethod
    def from_csv(cls, path) -> "PmTrace":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        d = len(header) - 4
        if header != ["iteration"] + [f"theta_{k + 1}" for k in range(d)] + ["sigma", "log_abs_f", "accepted"]:
            raise ValueError(f"unexpected trace header {header}")
        if not body:
            return cls.empty(d)
        arr = np.array(body, dtype=float)
        return cls(arr[:, 1:1 + d], arr[:, 1 + d].astype(np.int8), arr[:, 2 + d], arr[:, 3 + d].astype(bool))


def acceptance_probability(log_abs_f_cur: float, log_abs_f_prop: float,
                           log_t_reverse: float = 0.0, log_t_forward: float = 0.0) -> float:
    """``min(1, |f'|/|f| * t(theta; theta') / t(theta'; theta))`` from logs."""
    log_r = (log_abs_f_prop - log_abs_f_cur) + (log_t_reverse - log_t_forward)
    return 1.0 if log_r >= 0 else math.exp(log_r)


def pm_step(cur: PmState, target: PmTarget, proposal: GaussianProposal,
            rng: np.random.Generator, counters: Optional[dict] = None):
    """One pseudo-marginal MH transition; returns ``(state, accepted)``.

    A rejected proposal keeps the current pair including its estimate.
    """
    if cur.f_hat.sign == 0:
        raise ValueError("current state must carry a nonzero estimate")
    prop = proposal.sample(cur.theta, rng)
    f_new = target.estimate(prop, rng)
    if f_new is None:
        if counters is not None:
            counters["prior"] = counters.get("prior", 0) + 1
        return cur, False
    if f_new.sign == 0:
        if counters is not None:
            counters["zero"] = counters.get("zero", 0) + 1
        return cur, False
    a = acceptance_probability(cur.f_hat.log_mag, f_new.log_mag,
                               proposal.log_density(cur.theta, prop),
                               proposal.log_density(prop, cur.theta))
    if rng.random() < a:
        return PmState(prop, f_new), True
    return cur, False


def initial_state(theta0, target: PmTarget, rng, max_tries: int = 1000) -> PmState:
    """Draw estimates at ``theta0`` until one is nonzero."""
    for _ in range(max_tries):
        f = target.estimate(theta0, rng)
        if f is None:
            raise ValueError(f"initial theta {theta0} is outside the prior support")
        if f.sign != 0:
            return PmState(theta0, f)
    raise RuntimeError("could not obtain a nonzero initial estimate")


def run_pm_chain(theta0, n_iters: int, target: PmTarget, proposal: GaussianProposal,
                 rng: np.random.Generator, progress: Optional[Callable[[int], None]] = None) -> PmTrace:
    """Iterate :func:`pm_step` ``n_iters`` times from a fresh estimate at ``theta0``."""
    theta0 = np.asarray(theta0, dtype=float)
    d = theta0.size
    if n_iters == 0:
        return PmTrace.empty(d)
    state = initial_state(theta0, target, rng)
    thetas = np.empty((n_iters, d))
    sigma = np.empty(n_iters, np.int8)
    log_abs = np.empty(n_iters)
    acc = np.empty(n_iters, bool)
    counters: dict = {}
    for i in range(n_iters):
        state, a = pm_step(state, target, proposal, rng, counters)
        thetas[i] = state.theta
        sigma[i] = state.f_hat.sign
        log_abs[i] = state.f_hat.log_mag
        acc[i] = a
        if progress is not None:
            progress(i)
    return PmTrace(thetas, sigma, log_abs, acc, counters.get("zero", 0), counters.get("prior", 0))


def sign_corrected_expectation(trace: PmTrace, h: Callable = None) -> float:
    """``sum_i h(theta_i) sigma_i / sum_i sigma_i``; ``h`` defaults to the identity."""
    s = np.asarray(trace.sigma, dtype=float)
    denom = s.sum()
    if denom == 0:
        raise ZeroDivisionError("sign-corrected expectation undefined: signs sum to zero")
    if h is None:
        vals = trace.theta
    else:
        vals = np.array([h(t) for t in trace.theta], dtype=float)
    vals = np.asarray(vals, dtype=float)
    out = (s.reshape((-1,) + (1,) * (vals.ndim - 1)) * vals).sum(axis=0) / denom
    return float(out) if np.ndim(out) == 0 else out


def positive_fraction(trace: PmTrace) -> float:
    if len(trace) == 0:
        raise ValueError("positive fraction of an empty trace")
    return float(np.mean(np.asarray(trace.sigma) > 0))
