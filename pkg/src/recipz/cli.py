"""Command-line entry point: ``recipz <subcommand> [flags]``.

Subcommands ``estimate``, ``pm-ising``, ``pm-ergm`` and ``oracle`` write
CSV and JSON files under ``--out``; ``selftest`` runs the property checks.
Output layouts are described in ``docs/output_schema.md``.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from typing import Optional, Sequence

from .config import ConfigError, ExperimentConfig, load_config
from .diagnostics import SUMMARY_COLUMNS
from .experiments import run_estimate, run_oracle, run_pm, summary_table

log = logging.getLogger("recipz")

ESTIMATE_COLUMNS = ("estimator", "tau", "trial", "sign", "log_abs", "n", "coupled_at", "work")


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="recipz", description="Unbiased 1/Z estimation and pseudo-marginal MCMC.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, kinds in (("estimate", ("iae", "fce", "rbbce")),
                        ("pm-ising", ("iae", "fce", "rbbce", "exact")),
                        ("pm-ergm", ("iae", "fce", "rbbce", "exact")),
                        ("oracle", None)):
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file; keys override the command defaults")
        p.add_argument("--seed", type=_u64)
        p.add_argument("--out", help="output directory")
        p.add_argument("--workers", type=_positive)
        if kinds:
            p.add_argument("--estimator", choices=kinds, help="run only this estimator")
        p.add_argument("--full-scale", action="store_true", help="use the long reference run lengths")
        p.add_argument("-q", "--quiet", action="store_true")
    st = sub.add_parser("selftest")
    st.add_argument("--slow", action="store_true", help="also run the lattice-scale checks")
    return ap


def resolve_config(args) -> ExperimentConfig:
    cfg = load_config(args.config, args.command, args.full_scale)
    d = cfg.to_dict()
    if args.seed is not None:
        d["run"]["seed"] = args.seed
    if args.out is not None:
        d["run"]["out"] = args.out
    if args.workers is not None:
        d["run"]["workers"] = args.workers
    if getattr(args, "estimator", None):
        d["estimator"]["kinds"] = [args.estimator]
    return ExperimentConfig.from_dict(d)


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_csv(path: str, columns: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in columns])


def write_json(path: str, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")


def cmd_estimate(cfg: ExperimentConfig) -> dict:
    out = cfg.run.out
    os.makedirs(out, exist_ok=True)
    results = run_estimate(cfg)
    rows = []
    for r in results:
        tau = "" if r.tau is None else r.tau
        for kind, tr in r.trials.items():
            for t in range(tr.signs.size):
                rows.append({
                    "estimator": kind, "tau": tau, "trial": t, "sign": int(tr.signs[t]),
                    "log_abs": float(tr.log_mags[t]) if tr.signs[t] != 0 else -math.inf,
                    "n": int(tr.n[t]),
                    "coupled_at": "" if tr.coupled_at is None else int(tr.coupled_at[t]),
                    "work": "" if tr.work is None else int(tr.work[t]),
                })
    write_csv(os.path.join(out, "estimates.csv"), ESTIMATE_COLUMNS, rows)
    table = summary_table(results)
    write_csv(os.path.join(out, "summary.csv"), SUMMARY_COLUMNS, table)
    meta = {
        "command": "estimate",
        "config": cfg.to_dict(),
        "grid": [{"tau": r.tau, "log_z": r.log_z,
                  "summaries": {k: {"mean_sign": s.mean.sign, "mean_log_abs": s.mean.log_mag,
                                    "rel_std": s.rel_std, "frac_positive": s.frac_positive,
                                    "mean_coupled_at": s.mean_coupled_at}
                                for k, s in r.summaries.items()}}
                 for r in results],
    }
    write_json(os.path.join(out, "run.json"), meta)
    return {"results": results, "summary": table}


def _pm_command(cfg: ExperimentConfig, command: str, quiet: bool = True) -> dict:
    out = cfg.run.out
    os.makedirs(out, exist_ok=True)
    n = cfg.run.n_iters
    step = max(1, n // 10)

    def progress(kind, i):
        if not quiet and (i + 1) % step == 0:
            log.info("%s: %d/%d iterations", kind, i + 1, n)

    res = run_pm(cfg, command, progress=progress)
    for kind, trace in res["traces"].items():
        trace.to_csv(os.path.join(out, f"trace_{kind}.csv"))
    summary = {"command": command, "config": cfg.to_dict(), "data": res["data"], "chains": res["summaries"]}
    write_json(os.path.join(out, "summary.json"), summary)
    return res


def cmd_pm_ising(cfg: ExperimentConfig, quiet: bool = True) -> dict:
    return _pm_command(cfg, "pm-ising", quiet)


def cmd_pm_ergm(cfg: ExperimentConfig, quiet: bool = True) -> dict:
    return _pm_command(cfg, "pm-ergm", quiet)


def cmd_oracle(cfg: ExperimentConfig) -> list:
    recs = run_oracle(cfg)
    os.makedirs(cfg.run.out, exist_ok=True)
    write_json(os.path.join(cfg.run.out, "oracle.json"), {"config": cfg.to_dict(), "values": recs})
    return recs


def cmd_selftest(slow: bool = False) -> int:
    from .checks import run_checks
    results = run_checks(slow=slow)
    for r in results:
        print(r.line())
    return 0 if all(r.passed for r in results) else 1


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "selftest":
        return cmd_selftest(args.slow)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
        if args.command == "estimate":
            res = cmd_estimate(cfg)
            if not args.quiet:
                for row in res["summary"]:
                    print(",".join(_fmt(row[c]) for c in SUMMARY_COLUMNS))
        elif args.command == "pm-ising":
            cmd_pm_ising(cfg, args.quiet)
        elif args.command == "pm-ergm":
            cmd_pm_ergm(cfg, args.quiet)
        elif args.command == "oracle":
            for rec in cmd_oracle(cfg):
                if not args.quiet:
                    print(json.dumps(rec))
    except (ConfigError, ValueError, OSError) as exc:
        print(f"recipz {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
