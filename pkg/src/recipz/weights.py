"""Importance-weight sources whose exponentiated draws are unbiased for Z.

Every source returns *log* weights.  ``ais_weight`` and ``simple_is_weight``
are plain reference implementations that take arbitrary callables; the
``IsingAIS`` and ``ErgmAIS`` classes are compiled equivalents used by the
experiments, and ``BatchedSource`` averages ``m`` raw weights per draw.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable

import numba
import numpy as np

from .models.ergm import ErgmParams, _edge_sweep
from .models.ising import IsingParams, _gibbs_sweep, conditional_table
from .numerics import log_mean

__all__ = [
    "WeightSource",
    "AnnealingSchedule",
    "FiniteImportanceSource",
    "two_point_source",
    "IsingAIS",
    "ErgmAIS",
    "BatchedSource",
    "simple_is_weight",
    "ais_weight",
    "batched_weight",
    "SupportError",
]


class SupportError(ValueError):
    """A proposal drew a point where its own density is zero."""


class WeightSource(ABC):
    """Generator of i.i.d. log importance weights with ``E[exp(w)] = Z``."""

    batch_size: int = 1
    description: str = ""

    @abstractmethod
    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """``size`` independent log-weights."""

    def draw_one(self, rng: np.random.Generator) -> float:
        return float(self.draw(rng, 1)[0])


@dataclass(frozen=True)
class AnnealingSchedule:
    """Inverse temperatures ``0 = b_0 < b_1 < ... < b_n = 1``."""

    betas: tuple

    def __post_init__(self):
        b = tuple(float(v) for v in self.betas)
        if len(b) < 2:
            raise ValueError("schedule needs at least the two endpoints")
        if b[0] != 0.0 or b[-1] != 1.0:
            raise ValueError("schedule must start at 0 and end at 1")
        if any(b1 <= b0 for b0, b1 in zip(b, b[1:])):
            raise ValueError("schedule must be strictly increasing")
        object.__setattr__(self, "betas", b)

    @classmethod
    def linear(cls, n_levels: int) -> "AnnealingSchedule":
        """``n_levels`` equal steps; ``n_levels - 1`` transition kernels are applied."""
        if n_levels < 1:
            raise ValueError("n_levels must be >= 1")
        return cls(tuple(np.linspace(0.0, 1.0, n_levels + 1)))

    @property
    def n_levels(self) -> int:
        return len(self.betas) - 1

    def as_array(self) -> np.ndarray:
        return np.array(self.betas)


# ---------------------------------------------------------------------------
# Reference implementations


def simple_is_weight(log_target: Callable, sample_proposal: Callable,
                     log_proposal: Callable, rng: np.random.Generator) -> float:
    """Draw ``X ~ Q`` and return ``log P*(X) - log Q(X)``."""
    x = sample_proposal(rng)
    lq = log_proposal(x)
    if not lq > -math.inf:
        raise SupportError(f"proposal density is zero at its own draw {x!r}")
    return float(log_target(x) - lq)


def ais_weight(log_unnorm: Callable, sample_base: Callable, log_z0: float,
               schedule: AnnealingSchedule, kernel: Callable,
               rng: np.random.Generator) -> float:
    """One annealed importance weight along ``p_j ∝ base * (p*)^b_j``.

    Parameters
    ----------
    log_unnorm : callable ``x -> log p*(x)`` of the target.
    sample_base : callable ``rng -> x`` drawing exactly from the normalised base.
    log_z0 : log normaliser of the (unnormalised, constant-density) base.
    kernel : callable ``(x, inv_temp, rng) -> x`` leaving level ``inv_temp`` invariant.
    """
    b = schedule.betas
    x = sample_base(rng)
    lw = log_z0
    for j in range(1, len(b)):
        lw += (b[j] - b[j - 1]) * log_unnorm(x)
        if j < len(b) - 1:
            x = kernel(x, b[j], rng)
    return float(lw)


def batched_weight(source: WeightSource, m: int, rng: np.random.Generator) -> float:
    """Log of the mean of ``m`` raw weights from ``source``."""
    if m < 1:
        raise ValueError("batch size must be >= 1")
    return log_mean(source.draw(rng, m))


# ---------------------------------------------------------------------------
# Concrete sources


class FiniteImportanceSource(WeightSource):
    """Plain importance sampling on a finite state space."""

    def __init__(self, log_p_star, q, description: str = "finite importance sampler"):
        self.log_p_star = np.asarray(log_p_star, dtype=float)
        self.q = np.asarray(q, dtype=float)
        if self.q.shape != self.log_p_star.shape or np.any(self.q < 0) or not np.isclose(self.q.sum(), 1.0):
            raise ValueError("q must be a probability vector matching log_p_star")
        self.description = description

    @property
    def log_z(self) -> float:
        return float(np.log(np.exp(self.log_p_star).sum()))

    def state_weights(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return self.log_p_star - np.log(self.q)

    def draw(self, rng, size):
        if not hasattr(self, "_cdf"):
            self._cdf = np.cumsum(self.q)
            self._cdf[-1] = 1.0
            with np.errstate(divide="ignore"):
                self._lw = self.log_p_star - np.log(self.q)
        x = np.searchsorted(self._cdf, rng.random(size), side="right")
        if np.any(self.q[x] == 0):
            raise SupportError("proposal drew a zero-probability state")
        return self._lw[x]


def two_point_source() -> FiniteImportanceSource:
    """States {0, 1}, uniform proposal, ``P*(0)=1``, ``P*(1)=2`` (weights 2 and 4, Z = 3)."""
    return FiniteImportanceSource(np.log([1.0, 2.0]), [0.5, 0.5], "two-point model")


@numba.njit(cache=True)
def _ising_ais(n_chains, n_sites, alpha, ei, ej, beta, nbr, tables, betas, log_z0, rng):
    out = np.empty(n_chains)
    x = np.empty(n_sites, np.int8)
    n_lv = betas.size - 1
    for c in range(n_chains):
        for s in range(n_sites):
            x[s] = 1 if rng.random() < 0.5 else -1
        lw = log_z0
        for j in range(1, n_lv + 1):
            e = 0.0
            for s in range(n_sites):
                e += alpha[s] * x[s]
            for k in range(ei.size):
                e += beta[k] * x[ei[k]] * x[ej[k]]
            lw += (betas[j] - betas[j - 1]) * e
            if j < n_lv:
                _gibbs_sweep(x, nbr, tables[j], rng)
        out[c] = lw
    return out


class IsingAIS(WeightSource):
    """AIS from the uniform spin distribution with one Gibbs sweep per level."""

    def __init__(self, params: IsingParams, schedule: AnnealingSchedule):
        self.params = params
        self.schedule = schedule
        self.description = f"AIS {params.rows}x{params.cols} Ising, {schedule.n_levels} levels"
        betas = schedule.as_array()
        nbr, _ = conditional_table(params, 0.0)
        self._nbr = nbr
        self._tables = np.stack([conditional_table(params, b)[1] for b in betas])
        self._betas = betas
        e = params.edges
        self._ei = np.ascontiguousarray(e[:, 0])
        self._ej = np.ascontiguousarray(e[:, 1])
        self.log_z0 = params.n_sites * math.log(2.0)

    def draw(self, rng, size):
        p = self.params
        return _ising_ais(int(size), p.n_sites, p.alpha, self._ei, self._ej, p.beta,
                          self._nbr, self._tables, self._betas, self.log_z0, rng)


@numba.njit(cache=True)
def _ergm_ais(n_chains, n_nodes, theta_e, theta_s, betas, log_z0, rng):
    out = np.empty(n_chains)
    adj = np.zeros((n_nodes, n_nodes), np.uint8)
    deg = np.zeros(n_nodes, np.int64)
    n_lv = betas.size - 1
    for c in range(n_chains):
        deg[:] = 0
        for i in range(n_nodes):
            adj[i, i] = 0
            for j in range(i + 1, n_nodes):
                v = 1 if rng.random() < 0.5 else 0
                adj[i, j] = v
                adj[j, i] = v
                deg[i] += v
                deg[j] += v
        lw = log_z0
        for j in range(1, n_lv + 1):
            edges = 0.0
            stars = 0.0
            for i in range(n_nodes):
                edges += deg[i]
                stars += deg[i] * (deg[i] - 1) / 2.0
            e = theta_e * edges / 2.0 + theta_s * stars / n_nodes
            lw += (betas[j] - betas[j - 1]) * e
            if j < n_lv:
                _edge_sweep(adj, deg, theta_e, theta_s, betas[j], rng)
        out[c] = lw
    return out


class ErgmAIS(WeightSource):
    """AIS from uniform random graphs with one edge-toggle sweep per level."""

    def __init__(self, params: ErgmParams, n_nodes: int, schedule: AnnealingSchedule):
        self.params = params
        self.n_nodes = n_nodes
        self.schedule = schedule
        self.description = f"AIS ERGM on {n_nodes} nodes, {schedule.n_levels} levels"
        self.log_z0 = n_nodes * (n_nodes - 1) / 2 * math.log(2.0)

    def draw(self, rng, size):
        return _ergm_ais(int(size), self.n_nodes, self.params.theta_e, self.params.theta_s,
                         self.schedule.as_array(), self.log_z0, rng)


class BatchedSource(WeightSource):
    """Each draw is the log of the mean of ``m`` raw weights from ``raw``."""

    def __init__(self, raw: WeightSource, m: int):
        if m < 1:
            raise ValueError("batch size must be >= 1")
        self.raw = raw
        self.batch_size = m
        self.description = f"{raw.description}, batches of {m}"

    def draw(self, rng, size):
        lw = self.raw.draw(rng, size * self.batch_size)
        if self.batch_size == 1:
            return lw
        return np.asarray(log_mean(lw.reshape(size, self.batch_size), axis=1), dtype=float).reshape(size)
