"""Heterogeneous Ising lattices with open boundaries.

Unnormalised density ``p*(x) = exp(sum_i alpha_i x_i + sum_(i,j) beta_ij x_i x_j)``
over spins ``x_i in {-1, +1}`` on a ``rows x cols`` 4-neighbour grid.
Sites are numbered row-major; couplings are stored as one flat vector with
all horizontal edges first, then all vertical edges (both row-major), which
is the order returned by :func:`grid_edges`.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numba
import numpy as np

__all__ = [
    "IsingParams",
    "grid_edges",
    "ising_log_unnorm",
    "ising_gibbs_sweep",
    "conditional_table",
    "ising_logZ_bruteforce",
    "ising_logZ_transfer",
    "sample_tau_params",
    "sufficient_stats",
    "MAX_BRUTEFORCE_SITES",
    "MAX_TRANSFER_ROWS",
]

MAX_BRUTEFORCE_SITES = 20
MAX_TRANSFER_ROWS = 14


def grid_edges(rows: int, cols: int) -> np.ndarray:
    """Edge list ``(E, 2)`` of the open 4-neighbour grid, horizontal first."""
    idx = np.arange(rows * cols).reshape(rows, cols)
    horiz = np.stack([idx[:, :-1].ravel(), idx[:, 1:].ravel()], axis=1)
    vert = np.stack([idx[:-1, :].ravel(), idx[1:, :].ravel()], axis=1)
    return np.concatenate([horiz, vert]).astype(np.int64)


def n_grid_edges(rows: int, cols: int) -> int:
    return rows * (cols - 1) + (rows - 1) * cols


@dataclass(frozen=True, eq=False)
class IsingParams:
    rows: int
    cols: int
    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("lattice dimensions must be positive")
        alpha = np.array(self.alpha, dtype=float).ravel()
        beta = np.array(self.beta, dtype=float).ravel()
        if alpha.size != self.rows * self.cols:
            raise ValueError(f"alpha has {alpha.size} entries, lattice has {self.rows * self.cols} sites")
        n_e = n_grid_edges(self.rows, self.cols)
        if beta.size != n_e:
            raise ValueError(f"beta has {beta.size} entries, lattice has {n_e} edges")
        if not (np.all(np.isfinite(alpha)) and np.all(np.isfinite(beta))):
            raise ValueError("Ising parameters must be finite")
        alpha.setflags(write=False)
        beta.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @classmethod
    def homogeneous(cls, rows: int, cols: int, alpha: float, beta: float) -> "IsingParams":
        return cls(rows, cols, np.full(rows * cols, float(alpha)),
                   np.full(n_grid_edges(rows, cols), float(beta)))

    @property
    def n_sites(self) -> int:
        return self.rows * self.cols

    @cached_property
    def edges(self) -> np.ndarray:
        return grid_edges(self.rows, self.cols)

    @cached_property
    def _neighbours(self):
        """Per-site neighbour indices and coupling values, order up/down/left/right."""
        r, c = self.rows, self.cols
        nbr = np.full((r * c, 4), -1, dtype=np.int64)
        coup = np.zeros((r * c, 4))
        n_h = r * (c - 1)
        for e, (i, j) in enumerate(self.edges):
            if e < n_h:  # j is right of i
                nbr[i, 3], coup[i, 3] = j, self.beta[e]
                nbr[j, 2], coup[j, 2] = i, self.beta[e]
            else:  # j is below i
                nbr[i, 1], coup[i, 1] = j, self.beta[e]
                nbr[j, 0], coup[j, 0] = i, self.beta[e]
        return nbr, coup

    def horizontal(self) -> np.ndarray:
        """Horizontal couplings as ``(rows, cols - 1)``."""
        return self.beta[: self.rows * (self.cols - 1)].reshape(self.rows, self.cols - 1)

    def vertical(self) -> np.ndarray:
        """Vertical couplings as ``(rows - 1, cols)``."""
        return self.beta[self.rows * (self.cols - 1):].reshape(self.rows - 1, self.cols)

    def to_dict(self) -> dict:
        return {"rows": self.rows, "cols": self.cols,
                "alpha": self.alpha.tolist(), "beta": self.beta.tolist()}


def _check_state(p: IsingParams, x) -> np.ndarray:
    x = np.asarray(x)
    if x.shape[-1] != p.n_sites:
        raise ValueError(f"state has {x.shape[-1]} sites, model has {p.n_sites}")
    if not np.all(np.abs(x) == 1):
        raise ValueError("spins must be -1 or +1")
    return x


def ising_log_unnorm(p: IsingParams, x, inv_temp: float = 1.0):
    """``inv_temp * (alpha . x + sum_E beta_ij x_i x_j)``; ``x`` may be batched ``(..., sites)``."""
    x = _check_state(p, x).astype(float)
    e = p.edges
    val = x @ p.alpha + (x[..., e[:, 0]] * x[..., e[:, 1]]) @ p.beta
    return inv_temp * val


def sufficient_stats(rows: int, cols: int, x) -> tuple[float, float]:
    """``(sum_i x_i, sum_E x_i x_j)`` for the homogeneous two-parameter model."""
    x = np.asarray(x, dtype=float).ravel()
    e = grid_edges(rows, cols)
    return float(x.sum()), float(np.sum(x[e[:, 0]] * x[e[:, 1]]))


def conditional_table(p: IsingParams, inv_temp: float) -> tuple[np.ndarray, np.ndarray]:
    """Gibbs conditionals ``Pr(x_s = +1 | neighbours)`` for every neighbour pattern.

    Returns ``(nbr, table)`` where ``table[s, code]`` uses bit ``k`` of
    ``code`` for "neighbour ``k`` is +1"; absent neighbours have zero
    coupling so their bit is irrelevant.
    """
    nbr, coup = p._neighbours
    codes = np.arange(16)
    bits = ((codes[:, None] >> np.arange(4)) & 1) * 2 - 1  # (16, 4) in {-1,+1}
    field = p.alpha[:, None] + coup @ bits.T  # (sites, 16)
    table = 1.0 / (1.0 + np.exp(-2.0 * inv_temp * field))
    return nbr, np.ascontiguousarray(table)


@numba.njit(cache=True)
def _gibbs_sweep(x, nbr, table, rng):
    """One systematic-scan sweep in site order, in place on an int8 state."""
    for s in range(x.size):
        code = 0
        for k in range(4):
            j = nbr[s, k]
            if j >= 0 and x[j] > 0:
                code |= 1 << k
        x[s] = 1 if rng.random() < table[s, code] else -1


def ising_gibbs_sweep(p: IsingParams, x, inv_temp: float, rng: np.random.Generator) -> np.ndarray:
    """Return a new state after one single-site Gibbs sweep at ``inv_temp``."""
    out = np.array(_check_state(p, x), dtype=np.int8).ravel()
    nbr, table = conditional_table(p, inv_temp)
    _gibbs_sweep(out, nbr, table, rng)
    return out


def _logsumexp(v: np.ndarray) -> float:
    m = np.max(v)
    return float(m + np.log(np.sum(np.exp(v - m))))


def ising_logZ_bruteforce(p: IsingParams) -> float:
    """log Z by enumerating all ``2**sites`` spin configurations."""
    n = p.n_sites
    if n > MAX_BRUTEFORCE_SITES:
        raise ValueError(f"brute force limited to {MAX_BRUTEFORCE_SITES} sites, model has {n}")
    chunk = 1 << min(n, 16)
    parts = []
    for start in range(0, 1 << n, chunk):
        codes = np.arange(start, start + chunk, dtype=np.int64)
        x = ((codes[:, None] >> np.arange(n)) & 1) * 2 - 1
        parts.append(_logsumexp(ising_log_unnorm(p, x)))
    return _logsumexp(np.array(parts))


def ising_logZ_transfer(p: IsingParams) -> float:
    """log Z by contracting column configurations left to right.

    The state is a log-vector over the ``2**rows`` spin patterns of the
    current column, held as an array with one length-2 axis per row.
    Horizontal couplings factor over rows, so they are applied one axis at
    a time: ``O(cols * rows * 2**rows)``.
    """
    r = p.rows
    if r > MAX_TRANSFER_ROWS:
        raise ValueError(f"transfer matrix limited to {MAX_TRANSFER_ROWS} rows, model has {r}")
    alpha = p.alpha.reshape(r, p.cols)
    bh = p.horizontal()
    bv = p.vertical()
    spins = (np.indices((2,) * r) * 2 - 1).astype(float)  # (r, 2, ..., 2)

    def column_term(c):
        t = np.tensordot(alpha[:, c], spins, axes=1)
        for k in range(r - 1):
            t = t + bv[k, c] * spins[k] * spins[k + 1]
        return t

    v = column_term(0)
    for c in range(1, p.cols):
        for k in range(r):
            b = bh[k, c - 1]
            lo = np.take(v, 0, axis=k)
            hi = np.take(v, 1, axis=k)
            v = np.stack([np.logaddexp(lo + b, hi - b), np.logaddexp(lo - b, hi + b)], axis=k)
        v = v + column_term(c)
    return _logsumexp(v.ravel())


def sample_tau_params(rows: int, cols: int, tau: float, rng: np.random.Generator) -> IsingParams:
    """Every bias and coupling i.i.d. Uniform[-tau, tau]."""
    if tau < 0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    alpha = rng.uniform(-tau, tau, rows * cols)
    beta = rng.uniform(-tau, tau, n_grid_edges(rows, cols))
    if tau == 0:
        alpha[:] = 0.0
        beta[:] = 0.0
    return IsingParams(rows, cols, alpha, beta)


def exact_log_inv_z(p: IsingParams) -> float:
    return -ising_logZ_transfer(p)
