"""Exponential random graph model with edge and mean 2-star statistics.

``p*(x | theta) = exp(theta_e * edges(x) + theta_s * mean_i C(d_i, 2))`` over
undirected simple graphs on a fixed node set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numba
import numpy as np

__all__ = [
    "ErgmParams",
    "GraphState",
    "ergm_stats",
    "ergm_log_unnorm",
    "ergm_edge_flip_sweep",
    "ergm_logZ_bruteforce",
    "load_graph_edgelist",
    "florentine_business_path",
    "EdgeListError",
    "MAX_BRUTEFORCE_NODES",
]

MAX_BRUTEFORCE_NODES = 5


class EdgeListError(ValueError):
    """Malformed edge-list file; the message carries the line number."""


@dataclass(frozen=True)
class ErgmParams:
    theta_e: float
    theta_s: float

    def __post_init__(self):
        if not (math.isfinite(self.theta_e) and math.isfinite(self.theta_s)):
            raise ValueError("ERGM parameters must be finite")


class GraphState:
    """Undirected simple graph as a symmetric boolean adjacency matrix."""

    def __init__(self, adjacency):
        a = np.array(adjacency, dtype=bool)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("adjacency must be a square matrix")
        if not np.array_equal(a, a.T):
            raise ValueError("adjacency must be symmetric")
        if np.any(np.diag(a)):
            raise ValueError("self-loops are not allowed")
        self.adjacency = a

    @classmethod
    def empty(cls, n_nodes: int) -> "GraphState":
        return cls(np.zeros((n_nodes, n_nodes), dtype=bool))

    @classmethod
    def from_edges(cls, n_nodes: int, edges) -> "GraphState":
        a = np.zeros((n_nodes, n_nodes), dtype=bool)
        for u, v in edges:
            a[u, v] = a[v, u] = True
        return cls(a)

    @property
    def n_nodes(self) -> int:
        return self.adjacency.shape[0]

    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    def edge_list(self) -> list[tuple[int, int]]:
        i, j = np.nonzero(np.triu(self.adjacency, 1))
        return list(zip(i.tolist(), j.tolist()))

    def __eq__(self, other):
        return isinstance(other, GraphState) and np.array_equal(self.adjacency, other.adjacency)

    def __repr__(self):
        return f"GraphState(n_nodes={self.n_nodes}, edges={len(self.edge_list())})"


def ergm_stats(x: GraphState) -> tuple[int, float]:
    """``(edge count, mean number of 2-stars per node)``."""
    d = x.degrees()
    n = x.n_nodes
    edges = int(d.sum() // 2)
    two_stars = float(np.sum(d * (d - 1) / 2) / n) if n else 0.0
    return edges, two_stars


def ergm_log_unnorm(p: ErgmParams, x: GraphState, inv_temp: float = 1.0) -> float:
    e, s = ergm_stats(x)
    return inv_temp * (p.theta_e * e + p.theta_s * s)


@numba.njit(cache=True)
def _edge_sweep(adj, deg, theta_e, theta_s, inv_temp, rng):
    """Systematic scan over pairs ``i < j``.

    Each pair proposes a fresh uniform edge value (so half the time the
    current one), accepted with ``min(1, exp(delta))``.
    """
    n = deg.size
    for i in range(n - 1):
        for j in range(i + 1, n):
            u_prop = rng.random()
            u_acc = rng.random()
            if u_prop < 0.5:
                continue
            if adj[i, j]:
                delta = -theta_e - theta_s * ((deg[i] - 1) + (deg[j] - 1)) / n
            else:
                delta = theta_e + theta_s * (deg[i] + deg[j]) / n
            delta *= inv_temp
            if delta >= 0.0 or u_acc < math.exp(delta):
                if adj[i, j]:
                    adj[i, j] = 0
                    adj[j, i] = 0
                    deg[i] -= 1
                    deg[j] -= 1
                else:
                    adj[i, j] = 1
                    adj[j, i] = 1
                    deg[i] += 1
                    deg[j] += 1


def ergm_edge_flip_sweep(p: ErgmParams, x: GraphState, inv_temp: float,
                         rng: np.random.Generator) -> GraphState:
    adj = x.adjacency.astype(np.uint8)
    deg = adj.sum(axis=1).astype(np.int64)
    _edge_sweep(adj, deg, p.theta_e, p.theta_s, inv_temp, rng)
    return GraphState(adj.astype(bool))


def _all_graph_stats(n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    iu, ju = np.triu_indices(n_nodes, 1)
    m = iu.size
    codes = np.arange(1 << m, dtype=np.int64)
    present = (codes[:, None] >> np.arange(m)) & 1
    deg = np.zeros((codes.size, n_nodes))
    for k in range(m):
        deg[:, iu[k]] += present[:, k]
        deg[:, ju[k]] += present[:, k]
    edges = present.sum(axis=1).astype(float)
    two_stars = (deg * (deg - 1) / 2).sum(axis=1) / n_nodes
    return edges, two_stars


def ergm_logZ_bruteforce(p: ErgmParams, n_nodes: int) -> float:
    """log Z by enumerating all ``2**C(n, 2)`` graphs."""
    if n_nodes > MAX_BRUTEFORCE_NODES:
        raise ValueError(f"brute force limited to {MAX_BRUTEFORCE_NODES} nodes, got {n_nodes}")
    if n_nodes < 2:
        return 0.0
    edges, two_stars = _all_graph_stats(n_nodes)
    v = p.theta_e * edges + p.theta_s * two_stars
    m = v.max()
    return float(m + np.log(np.exp(v - m).sum()))


def load_graph_edgelist(path) -> GraphState:
    """Read a graph: first non-comment line is the node count, then ``u v`` pairs.

    Indices are 0-based; ``#`` starts a comment line; duplicate edges are
    harmless.
    """
    n_nodes = None
    edges = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split()
            if n_nodes is None:
                if len(fields) != 1:
                    raise EdgeListError(f"{path}:{lineno}: expected node count, got {line!r}")
                try:
                    n_nodes = int(fields[0])
                except ValueError:
                    raise EdgeListError(f"{path}:{lineno}: node count is not an integer: {line!r}") from None
                if n_nodes < 1:
                    raise EdgeListError(f"{path}:{lineno}: node count must be positive")
                continue
            if len(fields) != 2:
                raise EdgeListError(f"{path}:{lineno}: expected 'u v', got {line!r}")
            try:
                u, v = int(fields[0]), int(fields[1])
            except ValueError:
                raise EdgeListError(f"{path}:{lineno}: non-integer node index in {line!r}") from None
            if u == v:
                raise EdgeListError(f"{path}:{lineno}: self-loop on node {u}")
            if not (0 <= u < n_nodes and 0 <= v < n_nodes):
                raise EdgeListError(f"{path}:{lineno}: node index out of range 0..{n_nodes - 1}")
            edges.append((u, v))
    if n_nodes is None:
        raise EdgeListError(f"{path}: missing node count header")
    return GraphState.from_edges(n_nodes, edges)


def florentine_business_path() -> Path:
    """Path of the bundled Florentine business-ties edge list."""
    return Path(str(resources.files("recipz.data").joinpath("florentine_business.txt")))
