"""Russian-roulette debiasing of reciprocal importance weights.

Three estimators of ``1/Z`` are built from a stream of log importance
weights ``lw[0..N]`` (each an unbiased estimate of ``Z`` in the linear
domain) and a random truncation time ``N``:

* IAE, the increasing-averages baseline: ``Y_i = (i+1) / sum_{j<=i} w_j``.
* FCE, forward coupled chains: an independence Metropolis chain over the
  proposals and a shadow copy that skips the first transition.
* RBBCE, backward coupling with the accept/reject uniforms integrated out.

All three take log-weights and return a :class:`RouletteEstimate` whose
value is a :class:`~recipz.numerics.SignedLogValue`.  The ``*_batch``
functions run many independent trials inside one compiled loop and are
what the experiments use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numba
import numpy as np

from .numerics import SignedLogValue, ZERO, _add, _log_diff, _log1mexp, _logaddexp

__all__ = [
    "StoppingRule",
    "RouletteEstimate",
    "survival",
    "sample_stopping_time",
    "roulette_sum",
    "iae_estimate",
    "iae_path",
    "fce_estimate",
    "fce_estimate_burnin",
    "forward_chains",
    "rbbce_estimate",
    "rbbce_path",
    "rbbce_bruteforce_oracle",
    "forward_chain_expectation",
    "iae_batch",
    "fce_batch",
    "rbbce_batch",
    "ESTIMATORS",
]

ESTIMATORS = ("iae", "fce", "rbbce")


@dataclass(frozen=True)
class StoppingRule:
    """Truncation law with survival ``Pr(N >= k) = k ** -tail_exponent``."""

    tail_exponent: float = 1.1

    def __post_init__(self):
        if not (self.tail_exponent > 0 and math.isfinite(self.tail_exponent)):
            raise ValueError(f"tail_exponent must be positive and finite, got {self.tail_exponent!r}")

    def survival(self, k: int) -> float:
        return survival(self, k)

    def sample(self, rng: np.random.Generator) -> int:
        u = rng.random()
        while u == 0.0:
            u = rng.random()
        return sample_stopping_time(self, u)

    def sample_many(self, rng: np.random.Generator, size: int) -> np.ndarray:
        u = rng.random(size)
        u[u == 0.0] = 0.5  # probability 2**-53 per draw
        return np.floor(u ** (-1.0 / self.tail_exponent)).astype(np.int64)


@dataclass(frozen=True)
class RouletteEstimate:
    """One roulette estimate of ``1/Z`` with its bookkeeping.

    ``coupled_at`` is only set by FCE (None if the chains never met within
    ``n`` steps); ``work`` counts RBBCE inner-loop iterations.
    """

    value: SignedLogValue
    n: int
    coupled_at: Optional[int] = None
    work: Optional[int] = None


def survival(rule: StoppingRule, k: int) -> float:
    if k < 1:
        raise ValueError(f"survival is defined for k >= 1, got {k}")
    return float(k) ** (-rule.tail_exponent)


def sample_stopping_time(rule: StoppingRule, u: float) -> int:
    """Inverse-CDF draw: the largest ``k`` with ``u <= survival(k)``."""
    if not (0.0 < u < 1.0):
        raise ValueError(f"u must lie in the open interval (0, 1), got {u!r}")
    return int(math.floor(u ** (-1.0 / rule.tail_exponent)))


def roulette_sum(y0: SignedLogValue, diffs, rule: StoppingRule) -> SignedLogValue:
    """``y0 + sum_i diffs[i-1] / survival(i)`` accumulated in log domain."""
    s = y0
    for i, d in enumerate(diffs, start=1):
        if d.sign != 0:
            s = s + SignedLogValue(d.sign, d.log_mag + rule.tail_exponent * math.log(i))
    return s


def _as_log_weights(ws) -> np.ndarray:
    lw = np.ascontiguousarray(ws, dtype=np.float64)
    if lw.ndim != 1 or lw.size < 1:
        raise ValueError("weight stream must be a non-empty 1-d array of log-weights")
    if not np.all(np.isfinite(lw)):
        raise ValueError("log-weights must be finite (weights strictly positive)")
    return lw


def _wrap(s, l):
    return SignedLogValue(int(s), l) if s != 0 else ZERO


# ---------------------------------------------------------------------------
# IAE


@numba.njit(cache=True)
def _iae_logy(lw, n):
    """log Y_i = log((i+1) / sum_{j<=i} w_j) for i = 0..n."""
    out = np.empty(n + 1)
    m = lw[0]
    s = 1.0
    out[0] = -m
    for i in range(1, n + 1):
        x = lw[i]
        if x > m:
            s = s * math.exp(m - x) + 1.0
            m = x
        else:
            s += math.exp(x - m)
        out[i] = math.log((i + 1) / s) - m
    return out


@numba.njit(cache=True)
def _iae_kernel(lw, n, tail):
    logy = _iae_logy(lw, n)
    ss, sl = 1.0, logy[0]
    for i in range(1, n + 1):
        ds, dl = _log_diff(logy[i], logy[i - 1])
        if ds != 0.0:
            ss, sl = _add(ss, sl, ds, dl + tail * math.log(i))
    return ss, sl


def iae_path(ws) -> np.ndarray:
    """The IAE sequence ``log Y_0 .. log Y_N`` for a weight stream."""
    lw = _as_log_weights(ws)
    return _iae_logy(lw, lw.size - 1)


def iae_estimate(ws, rule: StoppingRule) -> RouletteEstimate:
    lw = _as_log_weights(ws)
    n = lw.size - 1
    s, l = _iae_kernel(lw, n, rule.tail_exponent)
    return RouletteEstimate(_wrap(s, l), n)


# ---------------------------------------------------------------------------
# FCE


@numba.njit(cache=True)
def _fce_kernel(lw, us, n, burn_in, tail):
    # Chains hold proposal indices; the shadow never sees transition 1.
    cur = 0
    sh = 0
    coupled = 0
    ss, sl = 1.0, -lw[0]
    for t in range(1, n + burn_in + 1):
        u = us[t - 1]
        w = lw[t]
        if w >= lw[cur] or u < math.exp(w - lw[cur]):
            cur = t
        if t > 1 and (w >= lw[sh] or u < math.exp(w - lw[sh])):
            sh = t
        if coupled == 0 and cur == sh:
            coupled = t
        if t == burn_in:
            ss, sl = 1.0, -lw[cur]
        elif t > burn_in:
            i = t - burn_in
            if cur != sh:
                ds, dl = _log_diff(-lw[cur], -lw[sh])
                if ds != 0.0:
                    ss, sl = _add(ss, sl, ds, dl + tail * math.log(i))
    if coupled > 0:
        coupled = max(1, coupled - burn_in)
    return ss, sl, coupled


@numba.njit(cache=True)
def _forward_chains(lw, us):
    n = lw.size - 1
    cur = np.zeros(n + 1, np.int64)
    sh = np.zeros(n + 1, np.int64)
    for t in range(1, n + 1):
        u = us[t - 1]
        w = lw[t]
        c = cur[t - 1]
        cur[t] = t if (w >= lw[c] or u < math.exp(w - lw[c])) else c
        s = sh[t - 1]
        sh[t] = t if (t > 1 and (w >= lw[s] or u < math.exp(w - lw[s]))) else s
    return cur, sh


def forward_chains(ws, us):
    """Held proposal indices of the FCE main and shadow chains after each step.

    ``main[t]`` is the index of the proposal held by the main chain after
    transition ``t``; ``shadow[t]`` likewise for the shadow chain, which
    after transition ``t`` represents the shadow state one step behind.
    """
    lw = _as_log_weights(ws)
    us = np.ascontiguousarray(us, dtype=np.float64)
    if us.size != lw.size - 1:
        raise ValueError(f"need {lw.size - 1} uniforms, got {us.size}")
    return _forward_chains(lw, us)


def fce_estimate(ws, us, rule: StoppingRule) -> RouletteEstimate:
    return fce_estimate_burnin(ws, us, rule, 0)


def fce_estimate_burnin(ws, us, rule: StoppingRule, burn_in: int) -> RouletteEstimate:
    """FCE whose roulette terms start after ``burn_in`` chain steps.

    ``ws`` holds ``N + burn_in + 1`` weights and ``us`` ``N + burn_in``
    uniforms; the realised truncation time is ``N``.
    """
    if burn_in < 0:
        raise ValueError("burn_in must be >= 0")
    lw = _as_log_weights(ws)
    us = np.ascontiguousarray(us, dtype=np.float64)
    n = lw.size - 1 - burn_in
    if n < 0:
        raise ValueError("weight stream shorter than the burn-in")
    if us.size != n + burn_in:
        raise ValueError(f"need {n + burn_in} uniforms, got {us.size}")
    s, l, c = _fce_kernel(lw, us, n, burn_in, rule.tail_exponent)
    return RouletteEstimate(_wrap(s, l), n, coupled_at=int(c) if c > 0 else None)


# ---------------------------------------------------------------------------
# RBBCE


@numba.njit(cache=True)
def _rbbce_logy(lw, n):
    """Rao-Blackwellised backward-chain values log Y_rb^(0..n) and work count."""
    logy = np.empty(n + 1)
    logy[0] = -lw[n]
    k = 0  # argmax_{0<=j<i} lw[n-j]
    work = 0
    for i in range(1, n + 1):
        start = lw[n - i]
        if start < lw[n - k]:
            logy[i] = logy[k]
        else:
            acc = -math.inf
            log_gamma = 0.0
            for j in range(i):
                work += 1
                d = lw[n - i + j + 1] - start
                if d > 0.0:
                    raise AssertionError("acceptance ratio above one in RBBCE branch")
                acc = _logaddexp(acc, d + log_gamma + logy[i - j - 1])
                if d == 0.0:
                    log_gamma = -math.inf
                    break
                log_gamma += _log1mexp(d)
            logy[i] = _logaddexp(acc, log_gamma - start)
            k = i
    return logy, work


@numba.njit(cache=True)
def _rbbce_kernel(lw, n, tail):
    logy, work = _rbbce_logy(lw, n)
    ss, sl = 1.0, logy[0]
    for i in range(1, n + 1):
        ds, dl = _log_diff(logy[i], logy[i - 1])
        if ds != 0.0:
            ss, sl = _add(ss, sl, ds, dl + tail * math.log(i))
    return ss, sl, work


def rbbce_path(ws):
    """``(log Y_rb^(0..N), work)`` for a weight stream in proposal order."""
    lw = _as_log_weights(ws)
    return _rbbce_logy(lw, lw.size - 1)


def rbbce_estimate(ws, rule: StoppingRule) -> RouletteEstimate:
    lw = _as_log_weights(ws)
    n = lw.size - 1
    s, l, work = _rbbce_kernel(lw, n, rule.tail_exponent)
    return RouletteEstimate(_wrap(s, l), n, work=int(work))


# ---------------------------------------------------------------------------
# Exact-enumeration oracles (independent of the recursions above)


def rbbce_bruteforce_oracle(ws, i: int) -> float:
    """``E[1/w]`` at the end of the backward chain started at proposal ``N - i``.

    Propagates the exact distribution over held proposals through
    transitions ``N-i+1 .. N``, each accepting with ``min(1, w_prop/w_cur)``.
    Works in the linear domain, so keep weights moderate.
    """
    w = np.exp(_as_log_weights(ws))
    n = w.size - 1
    if not 0 <= i <= n:
        raise ValueError(f"index {i} outside 0..{n}")
    if i > 12:
        raise ValueError("oracle is limited to i <= 12")
    dist = {n - i: 1.0}
    for p in range(n - i + 1, n + 1):
        nxt: dict[int, float] = {}
        for c, pr in dist.items():
            a = min(1.0, w[p] / w[c])
            nxt[p] = nxt.get(p, 0.0) + pr * a
            if a < 1.0:
                nxt[c] = nxt.get(c, 0.0) + pr * (1.0 - a)
        dist = nxt
    return sum(pr / w[c] for c, pr in dist.items())


def forward_chain_expectation(ws) -> float:
    """Exact ``E[1/w(X^(N))]`` of the forward (main) chain over its uniforms.

    Enumerates every accept/reject path with its probability; cost is
    ``2**N`` so only for short streams.
    """
    w = np.exp(_as_log_weights(ws))
    n = w.size - 1
    if n > 16:
        raise ValueError("path enumeration limited to N <= 16")

    def walk(t, cur, pr):
        if t > n:
            return pr / w[cur]
        a = min(1.0, w[t] / w[cur])
        total = walk(t + 1, t, pr * a)
        if a < 1.0:
            total += walk(t + 1, cur, pr * (1.0 - a))
        return total

    return walk(1, 0, 1.0)


# ---------------------------------------------------------------------------
# Batched trials: trial t uses lw[offsets[t] : offsets[t+1]].


@numba.njit(cache=True)
def _iae_batch(lw, offsets, tail):
    m = offsets.size - 1
    signs = np.empty(m)
    logs = np.empty(m)
    for t in range(m):
        seg = lw[offsets[t]:offsets[t + 1]]
        signs[t], logs[t] = _iae_kernel(seg, seg.size - 1, tail)
    return signs, logs


@numba.njit(cache=True)
def _fce_batch(lw, offsets, us, u_offsets, burn_in, tail):
    m = offsets.size - 1
    signs = np.empty(m)
    logs = np.empty(m)
    coupled = np.empty(m, np.int64)
    for t in range(m):
        seg = lw[offsets[t]:offsets[t + 1]]
        n = seg.size - 1 - burn_in
        signs[t], logs[t], coupled[t] = _fce_kernel(
            seg, us[u_offsets[t]:u_offsets[t + 1]], n, burn_in, tail)
    return signs, logs, coupled


@numba.njit(cache=True)
def _rbbce_batch(lw, offsets, tail):
    m = offsets.size - 1
    signs = np.empty(m)
    logs = np.empty(m)
    work = np.empty(m, np.int64)
    for t in range(m):
        seg = lw[offsets[t]:offsets[t + 1]]
        signs[t], logs[t], work[t] = _rbbce_kernel(seg, seg.size - 1, tail)
    return signs, logs, work


def _offsets(lengths) -> np.ndarray:
    return np.concatenate([[0], np.cumsum(np.asarray(lengths, dtype=np.int64))]).astype(np.int64)


def iae_batch(lw, lengths, rule: StoppingRule):
    """IAE over concatenated streams; returns ``(signs, log_mags)``."""
    return _iae_batch(np.ascontiguousarray(lw, dtype=np.float64), _offsets(lengths), rule.tail_exponent)


def fce_batch(lw, lengths, us, rule: StoppingRule, burn_in: int = 0):
    """FCE over concatenated streams; returns ``(signs, log_mags, coupled_at)``.

    Stream ``t`` has ``lengths[t]`` weights and consumes ``lengths[t] - 1``
    uniforms from ``us``; ``coupled_at`` is 0 where the chains never met.
    """
    lengths = np.asarray(lengths, dtype=np.int64)
    if np.any(lengths < burn_in + 1):
        raise ValueError("every stream needs at least burn_in + 1 weights")
    return _fce_batch(np.ascontiguousarray(lw, dtype=np.float64), _offsets(lengths),
                      np.ascontiguousarray(us, dtype=np.float64), _offsets(lengths - 1),
                      burn_in, rule.tail_exponent)


def rbbce_batch(lw, lengths, rule: StoppingRule):
    """RBBCE over concatenated streams; returns ``(signs, log_mags, work)``."""
    return _rbbce_batch(np.ascontiguousarray(lw, dtype=np.float64), _offsets(lengths), rule.tail_exponent)
