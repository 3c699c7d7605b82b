"""Unbiased estimation of reciprocal partition functions.

Russian-roulette truncation over importance weights (IAE, FCE, RBBCE),
exact and annealed estimates of ``Z`` for Ising lattices and ERGMs, and a
sign-corrected pseudo-marginal Metropolis-Hastings sampler.
"""

from .numerics import SignedLogValue, log_mean
from .roulette import (
    StoppingRule,
    RouletteEstimate,
    fce_estimate,
    fce_estimate_burnin,
    iae_estimate,
    rbbce_estimate,
)

__version__ = "0.1.0"

__all__ = [
    "SignedLogValue",
    "log_mean",
    "StoppingRule",
    "RouletteEstimate",
    "iae_estimate",
    "fce_estimate",
    "fce_estimate_burnin",
    "rbbce_estimate",
]
