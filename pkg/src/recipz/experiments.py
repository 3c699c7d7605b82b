"""Experiment drivers behind the command-line interface.

Each driver takes an :class:`~recipz.config.ExperimentConfig`, draws all of
its randomness from :func:`~recipz.seeding.substream`, and returns plain
Python/numpy results; writing files is left to :mod:`recipz.cli`.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .config import ExperimentConfig
from .diagnostics import sign_corrected_se, summarize
from .models.ergm import (
    ErgmParams,
    ergm_logZ_bruteforce,
    ergm_stats,
    florentine_business_path,
    load_graph_edgelist,
    MAX_BRUTEFORCE_NODES,
)
from .models.ising import (
    IsingParams,
    MAX_BRUTEFORCE_SITES,
    _gibbs_sweep,
    conditional_table,
    ising_logZ_bruteforce,
    ising_logZ_transfer,
    sample_tau_params,
    sufficient_stats,
)
from .pseudo_marginal import (
    ExactInvZ,
    GaussianProposal,
    PmTarget,
    PmTrace,
    RouletteInvZ,
    UniformBoxPrior,
    positive_fraction,
    run_pm_chain,
    sign_corrected_expectation,
)
from .roulette import StoppingRule, fce_batch, iae_batch, rbbce_batch
from .seeding import substream
from .weights import AnnealingSchedule, BatchedSource, ErgmAIS, IsingAIS, WeightSource, two_point_source

__all__ = [
    "TrialResults",
    "estimate_trials",
    "run_estimate",
    "generate_ising_data",
    "ising_pm_target",
    "ergm_pm_target",
    "run_pm",
    "run_oracle",
]


@dataclass
class TrialResults:
    """Per-trial output of one estimator: signs, log magnitudes, N and extras."""

    signs: np.ndarray
    log_mags: np.ndarray
    n: np.ndarray
    coupled_at: Optional[np.ndarray] = None
    work: Optional[np.ndarray] = None

    @classmethod
    def concat(cls, parts: list["TrialResults"]) -> "TrialResults":
        def cat(name):
            vals = [getattr(p, name) for p in parts]
            return None if vals[0] is None else np.concatenate(vals)
        return cls(cat("signs"), cat("log_mags"), cat("n"), cat("coupled_at"), cat("work"))


def _trial_chunk(source: WeightSource, rule: StoppingRule, seed: int, key: tuple,
                 start: int, stop: int, kinds: tuple, burn_in: int) -> dict:
    """Trials ``start..stop-1`` sharing one weight stream across estimators."""
    lws, uss, ns = [], [], []
    for t in range(start, stop):
        rng = substream(seed, "estimate", *key, t)
        n = rule.sample(rng)
        lws.append(source.draw(rng, n + 1 + burn_in))
        uss.append(rng.random(n + burn_in))
        ns.append(n)
    ns = np.asarray(ns, dtype=np.int64)
    out = {}
    if "iae" in kinds or "rbbce" in kinds:
        head = np.concatenate([lw[: n + 1] for lw, n in zip(lws, ns)])
        if "iae" in kinds:
            s, l = iae_batch(head, ns + 1, rule)
            out["iae"] = TrialResults(s, l, ns)
        if "rbbce" in kinds:
            s, l, w = rbbce_batch(head, ns + 1, rule)
            out["rbbce"] = TrialResults(s, l, ns, work=w)
    if "fce" in kinds:
        s, l, c = fce_batch(np.concatenate(lws), ns + 1 + burn_in, np.concatenate(uss), rule, burn_in)
        out["fce"] = TrialResults(s, l, ns, coupled_at=c)
    return out


def estimate_trials(source: WeightSource, rule: StoppingRule, n_trials: int, seed: int,
                    key: tuple = (), kinds=("iae", "fce", "rbbce"), burn_in: int = 0,
                    workers: int = 1, chunk: int = 250) -> dict[str, TrialResults]:
    """Run ``n_trials`` roulette estimates of ``1/Z`` for each requested estimator.

    Trial ``t`` draws its truncation time, weights and uniforms from
    ``substream(seed, "estimate", *key, t)`` and every estimator sees the
    same stream, so estimators are compared on common random numbers and
    the result is independent of ``workers``.
    """
    kinds = tuple(k for k in kinds if k in ("iae", "fce", "rbbce"))
    bounds = [(a, min(a + chunk, n_trials)) for a in range(0, n_trials, chunk)]
    if workers > 1 and len(bounds) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            futs = [ex.submit(_trial_chunk, source, rule, seed, key, a, b, kinds, burn_in) for a, b in bounds]
            parts = [f.result() for f in futs]
    else:
        parts = [_trial_chunk(source, rule, seed, key, a, b, kinds, burn_in) for a, b in bounds]
    return {k: TrialResults.concat([p[k] for p in parts]) for k in kinds}


@dataclass
class EstimateResult:
    tau: Optional[float]
    log_z: float
    trials: dict
    summaries: dict


def estimate_source(cfg: ExperimentConfig, tau_index: int, tau: float):
    """The weight source and exact ``log Z`` for one point of the tau grid."""
    m, a = cfg.model, cfg.ais
    if m.kind == "two_point":
        src = two_point_source()
        raw = src
        log_z = src.log_z
    elif m.kind == "ising":
        if m.alpha is not None or m.beta is not None:
            params = IsingParams(m.rows, m.cols, m.alpha, m.beta)
        else:
            params = sample_tau_params(m.rows, m.cols, tau, substream(cfg.run.seed, "model", tau_index))
        raw = IsingAIS(params, AnnealingSchedule.linear(a.n_levels))
        log_z = ising_logZ_transfer(params)
    else:
        raise ValueError("the estimate command supports ising and two_point models")
    return (BatchedSource(raw, a.batch_size) if a.batch_size > 1 else raw), log_z


def run_estimate(cfg: ExperimentConfig) -> list[EstimateResult]:
    rule = StoppingRule(cfg.estimator.tail_exponent)
    taus = [None] if cfg.model.kind == "two_point" else list(cfg.model.taus)
    results = []
    for k, tau in enumerate(taus):
        source, log_z = estimate_source(cfg, k, tau if tau is not None else 0.0)
        trials = estimate_trials(source, rule, cfg.run.n_trials, cfg.run.seed, key=(k,),
                                 kinds=cfg.estimator.kinds, burn_in=cfg.estimator.burn_in,
                                 workers=cfg.run.workers)
        summaries = {kind: summarize((tr.signs, tr.log_mags), -log_z, tr.coupled_at)
                     for kind, tr in trials.items()}
        results.append(EstimateResult(tau, log_z, trials, summaries))
    return results


# ---------------------------------------------------------------------------
# Pseudo-marginal experiments


def generate_ising_data(params: IsingParams, sweeps: int, rng: np.random.Generator) -> np.ndarray:
    """A single configuration after ``sweeps`` Gibbs sweeps from a uniform start."""
    x = np.where(rng.random(params.n_sites) < 0.5, 1, -1).astype(np.int8)
    nbr, table = conditional_table(params, 1.0)
    for _ in range(sweeps):
        _gibbs_sweep(x, nbr, table, rng)
    return x


def ising_pm_target(cfg: ExperimentConfig, y: np.ndarray, kind: str) -> PmTarget:
    m, a, e = cfg.model, cfg.ais, cfg.estimator
    rows, cols = m.rows, m.cols
    s1, s2 = sufficient_stats(rows, cols, y)
    prior = UniformBoxPrior(tuple(cfg.pm.prior_low), tuple(cfg.pm.prior_high))
    if kind == "exact":
        inv_z = ExactInvZ(lambda th: ising_logZ_transfer(IsingParams.homogeneous(rows, cols, th[0], th[1])))
    else:
        sched = AnnealingSchedule.linear(a.n_levels)

        def make_source(th):
            raw = IsingAIS(IsingParams.homogeneous(rows, cols, th[0], th[1]), sched)
            return BatchedSource(raw, a.batch_size)

        inv_z = RouletteInvZ(kind, make_source, StoppingRule(e.tail_exponent), e.n_avg, e.burn_in)
    return PmTarget(lambda th: th[0] * s1 + th[1] * s2, prior, inv_z)


def ergm_pm_target(cfg: ExperimentConfig, graph, kind: str) -> PmTarget:
    a, e = cfg.ais, cfg.estimator
    n = graph.n_nodes
    edges, stars = ergm_stats(graph)
    prior = UniformBoxPrior(tuple(cfg.pm.prior_low), tuple(cfg.pm.prior_high))
    if kind == "exact":
        if n > MAX_BRUTEFORCE_NODES:
            raise ValueError(f"exact ERGM normaliser needs <= {MAX_BRUTEFORCE_NODES} nodes, graph has {n}")
        inv_z = ExactInvZ(lambda th: ergm_logZ_bruteforce(ErgmParams(th[0], th[1]), n))
    else:
        sched = AnnealingSchedule.linear(a.n_levels)

        def make_source(th):
            return BatchedSource(ErgmAIS(ErgmParams(th[0], th[1]), n, sched), a.batch_size)

        inv_z = RouletteInvZ(kind, make_source, StoppingRule(e.tail_exponent), e.n_avg, e.burn_in)
    return PmTarget(lambda th: th[0] * edges + th[1] * stars, prior, inv_z)


def pm_summary(trace: PmTrace, names) -> dict:
    out = {"n_iters": len(trace), "n_zero_rejects": trace.n_zero_rejects,
           "n_prior_rejects": trace.n_prior_rejects}
    if len(trace) == 0:
        return out
    out["positive_fraction"] = positive_fraction(trace)
    out["acceptance_rate"] = float(np.mean(trace.accepted))
    try:
        mean = np.atleast_1d(sign_corrected_expectation(trace))
        out["posterior_mean"] = {nm: float(v) for nm, v in zip(names, mean)}
        if len(trace) >= 100:
            out["posterior_mean_mcse"] = {nm: sign_corrected_se(trace, k) for k, nm in enumerate(names)}
    except ZeroDivisionError:
        out["posterior_mean"] = None
    return out


def run_pm(cfg: ExperimentConfig, command: str, kinds=None,
           progress: Optional[Callable[[str, int], None]] = None) -> dict:
    """Data preparation plus one chain per estimator kind.

    Returns ``{"data": metadata, "traces": {kind: PmTrace}, "summaries": {kind: dict}}``.
    """
    kinds = list(kinds or cfg.estimator.kinds)
    seed = cfg.run.seed
    if command == "pm-ising":
        m = cfg.model
        true = m.true_theta or [0.1, 0.1]
        y = generate_ising_data(IsingParams.homogeneous(m.rows, m.cols, *true), m.data_sweeps,
                                substream(seed, "data"))
        s1, s2 = sufficient_stats(m.rows, m.cols, y)
        data = {"rows": m.rows, "cols": m.cols, "true_theta": list(true), "gibbs_sweeps": m.data_sweeps,
                "seed": seed, "sum_spins": s1, "sum_neighbour_products": s2}
        names = ("alpha", "beta")
        make_target = lambda kind: ising_pm_target(cfg, y, kind)  # noqa: E731
    elif command == "pm-ergm":
        path = cfg.model.edgelist or str(florentine_business_path())
        graph = load_graph_edgelist(path)
        e, s = ergm_stats(graph)
        data = {"edgelist": path, "n_nodes": graph.n_nodes, "edges": e, "avg_two_stars": s}
        names = ("theta_e", "theta_s")
        make_target = lambda kind: ergm_pm_target(cfg, graph, kind)  # noqa: E731
    else:
        raise ValueError(f"unknown pseudo-marginal command {command!r}")
    theta0 = np.asarray(cfg.pm.theta0 if cfg.pm.theta0 is not None
                        else UniformBoxPrior(tuple(cfg.pm.prior_low), tuple(cfg.pm.prior_high)).mean)
    proposal = GaussianProposal(tuple(cfg.pm.step))
    traces, summaries = {}, {}
    for idx, kind in enumerate(kinds):
        cb = (lambda i, kind=kind: progress(kind, i)) if progress else None
        trace = run_pm_chain(theta0, cfg.run.n_iters, make_target(kind), proposal,
                             substream(seed, "chain", idx), progress=cb)
        traces[kind] = trace
        summaries[kind] = pm_summary(trace, names)
    data["theta0"] = theta0.tolist()
    return {"data": data, "traces": traces, "summaries": summaries}


def run_oracle(cfg: ExperimentConfig) -> list[dict]:
    m = cfg.model
    if m.kind != "ising":
        raise ValueError("the oracle command supports Ising models")
    out = []
    grid = [None] if (m.alpha is not None or m.beta is not None) else list(m.taus)
    for k, tau in enumerate(grid):
        if tau is None:
            params = IsingParams(m.rows, m.cols, m.alpha, m.beta)
        else:
            params = sample_tau_params(m.rows, m.cols, tau, substream(cfg.run.seed, "model", k))
        rec = {"rows": m.rows, "cols": m.cols, "tau": tau, "log_z_transfer": ising_logZ_transfer(params)}
        if params.n_sites <= MAX_BRUTEFORCE_SITES:
            rec["log_z_bruteforce"] = ising_logZ_bruteforce(params)
        else:
            rec["log_z_bruteforce"] = None
            rec["bruteforce_refused"] = f"{params.n_sites} sites exceeds the limit of {MAX_BRUTEFORCE_SITES}"
        out.append(rec)
    return out


def summary_table(results: list[EstimateResult]) -> list[dict]:
    rows = []
    for r in results:
        for kind, s in r.summaries.items():
            rows.append(s.row(kind, "" if r.tau is None else r.tau))
    return rows

