"""Model families used in the experiments: Ising lattices and ERGMs."""

from .ergm import (
    EdgeListError,
    ErgmParams,
    GraphState,
    ergm_edge_flip_sweep,
    ergm_log_unnorm,
    ergm_logZ_bruteforce,
    ergm_stats,
    florentine_business_path,
    load_graph_edgelist,
)
from .ising import (
    IsingParams,
    conditional_table,
    grid_edges,
    ising_gibbs_sweep,
    ising_log_unnorm,
    ising_logZ_bruteforce,
    ising_logZ_transfer,
    sample_tau_params,
    sufficient_stats,
)

__all__ = [
    "EdgeListError",
    "ErgmParams",
    "GraphState",
    "IsingParams",
    "conditional_table",
    "ergm_edge_flip_sweep",
    "ergm_log_unnorm",
    "ergm_logZ_bruteforce",
    "ergm_stats",
    "florentine_business_path",
    "grid_edges",
    "ising_gibbs_sweep",
    "ising_log_unnorm",
    "ising_logZ_bruteforce",
    "ising_logZ_transfer",
    "load_graph_edgelist",
    "sample_tau_params",
    "sufficient_stats",
]
