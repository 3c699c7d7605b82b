"""Experiment configuration: JSON files mapped onto nested dataclasses.

Unknown keys are rejected and every validation error names the offending
field, e.g. ``ais.n_levels: must be >= 1``.
"""

from __future__ import annotations

import copy
import json
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

__all__ = ["ConfigError", "ExperimentConfig", "default_config", "load_config", "merge"]

COMMANDS = ("estimate", "pm-ising", "pm-ergm", "oracle")
ESTIMATOR_KINDS = ("iae", "fce", "rbbce", "exact")


class ConfigError(ValueError):
    pass


@dataclass
class ModelSpec:
    kind: str = "ising"  # ising | ergm | two_point
    rows: int = 10
    cols: int = 30
    taus: list = field(default_factory=lambda: [round(0.1 * k, 10) for k in range(1, 11)])
    alpha: Optional[list] = None
    beta: Optional[list] = None
    edgelist: Optional[str] = None
    true_theta: Optional[list] = None
    data_sweeps: int = 10000


@dataclass
class EstimatorSpec:
    kinds: list = field(default_factory=lambda: ["iae", "fce", "rbbce"])
    tail_exponent: float = 1.1
    burn_in: int = 0
    n_avg: int = 1


@dataclass
class AisSpec:
    n_levels: int = 10
    batch_size: int = 10


@dataclass
class RunSpec:
    n_trials: int = 2000
    n_iters: int = 5000
    seed: int = 0
    out: str = "out"
    workers: int = 1


@dataclass
class PmSpec:
    prior_low: list = field(default_factory=lambda: [-1.0, 0.0])
    prior_high: list = field(default_factory=lambda: [1.0, 0.4])
    step: list = field(default_factory=lambda: [0.025, 0.01])
    theta0: Optional[list] = None


_SECTIONS = {"model": ModelSpec, "estimator": EstimatorSpec, "ais": AisSpec, "run": RunSpec, "pm": PmSpec}


@dataclass
class ExperimentConfig:
    model: ModelSpec = field(default_factory=ModelSpec)
    estimator: EstimatorSpec = field(default_factory=EstimatorSpec)
    ais: AisSpec = field(default_factory=AisSpec)
    run: RunSpec = field(default_factory=RunSpec)
    pm: PmSpec = field(default_factory=PmSpec)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(d) - set(_SECTIONS)
        if unknown:
            raise ConfigError(f"unknown config section(s): {', '.join(sorted(unknown))}")
        parts = {}
        for name, typ in _SECTIONS.items():
            sec = d.get(name, {})
            if not isinstance(sec, dict):
                raise ConfigError(f"{name}: must be an object")
            allowed = {f.name for f in fields(typ)}
            bad = set(sec) - allowed
            if bad:
                raise ConfigError(f"{name}: unknown key(s) {', '.join(sorted(bad))}")
            parts[name] = typ(**copy.deepcopy(sec))
        cfg = cls(**parts)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        m, e, a, r, p = self.model, self.estimator, self.ais, self.run, self.pm

        def need(cond, where, msg):
            if not cond:
                raise ConfigError(f"{where}: {msg}")

        need(m.kind in ("ising", "ergm", "two_point"), "model.kind", f"unknown model {m.kind!r}")
        need(isinstance(m.rows, int) and m.rows >= 1, "model.rows", "must be an integer >= 1")
        need(isinstance(m.cols, int) and m.cols >= 1, "model.cols", "must be an integer >= 1")
        need(isinstance(m.taus, list) and len(m.taus) >= 1, "model.taus", "must be a non-empty list")
        need(all(isinstance(t, (int, float)) and t >= 0 for t in m.taus), "model.taus", "every tau must be >= 0")
        need(m.kind != "ergm" or (m.edgelist is None or len(str(m.edgelist)) > 0), "model.edgelist", "must be non-empty")
        need(m.data_sweeps >= 1, "model.data_sweeps", "must be >= 1")
        need(m.true_theta is None or len(m.true_theta) == 2, "model.true_theta", "must have two entries")
        need(isinstance(e.kinds, list) and len(e.kinds) >= 1, "estimator.kinds", "must be a non-empty list")
        for k in e.kinds:
            need(k in ESTIMATOR_KINDS, "estimator.kinds", f"unknown estimator {k!r}")
        need(e.tail_exponent > 0, "estimator.tail_exponent", "must be > 0")
        need(isinstance(e.burn_in, int) and e.burn_in >= 0, "estimator.burn_in", "must be an integer >= 0")
        need(isinstance(e.n_avg, int) and e.n_avg >= 1, "estimator.n_avg", "must be an integer >= 1")
        need(isinstance(a.n_levels, int) and a.n_levels >= 1, "ais.n_levels", "must be an integer >= 1")
        need(isinstance(a.batch_size, int) and a.batch_size >= 1, "ais.batch_size", "must be an integer >= 1")
        need(isinstance(r.n_trials, int) and r.n_trials >= 1, "run.n_trials", "must be an integer >= 1")
        need(isinstance(r.n_iters, int) and r.n_iters >= 0, "run.n_iters", "must be an integer >= 0")
        need(isinstance(r.seed, int) and 0 <= r.seed < 2 ** 64, "run.seed", "must be an unsigned 64-bit integer")
        need(isinstance(r.out, str) and len(r.out) > 0, "run.out", "must be a non-empty path")
        need(isinstance(r.workers, int) and r.workers >= 1, "run.workers", "must be an integer >= 1")
        need(len(p.prior_low) == len(p.prior_high) == len(p.step), "pm", "prior_low, prior_high and step need equal length")
        need(all(h > l for l, h in zip(p.prior_low, p.prior_high)), "pm.prior_high", "must exceed prior_low")
        need(all(s >= 0 for s in p.step), "pm.step", "must be >= 0")
        need(p.theta0 is None or len(p.theta0) == len(p.step), "pm.theta0", "dimension mismatch")


def merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


# Desk-scale defaults; full_scale swaps in the long reference settings.
_DEFAULTS = {
    "estimate": {
        "model": {"kind": "ising", "rows": 10, "cols": 30},
        "estimator": {"kinds": ["iae", "fce", "rbbce"]},
        "ais": {"n_levels": 10, "batch_size": 10},
        "run": {"n_trials": 2000},
    },
    "pm-ising": {
        "model": {"kind": "ising", "rows": 10, "cols": 10, "true_theta": [0.1, 0.1]},
        "estimator": {"kinds": ["rbbce", "fce", "iae"], "n_avg": 2},
        "ais": {"n_levels": 30, "batch_size": 10},
        "run": {"n_iters": 5000},
        "pm": {"prior_low": [-1.0, 0.0], "prior_high": [1.0, 0.4], "step": [0.025, 0.01]},
    },
    "pm-ergm": {
        "model": {"kind": "ergm"},
        "estimator": {"kinds": ["rbbce", "fce", "iae"], "n_avg": 10},
        "ais": {"n_levels": 10, "batch_size": 10},
        "run": {"n_iters": 2000},
        "pm": {"prior_low": [-2.5, -1.0], "prior_high": [2.5, 1.0], "step": [1.0, 0.1]},
    },
    "oracle": {
        "model": {"kind": "ising", "rows": 10, "cols": 30, "taus": [0.5]},
    },
}

_FULL_SCALE = {
    "estimate": {"run": {"n_trials": 10000}},
    "pm-ising": {"model": {"rows": 10, "cols": 30}, "run": {"n_iters": 100000}},
    "pm-ergm": {"run": {"n_iters": 100000}},
    "oracle": {},
}


def default_config(command: str, full_scale: bool = False) -> ExperimentConfig:
    if command not in COMMANDS:
        raise ConfigError(f"no defaults for command {command!r}")
    d = merge(ExperimentConfig().to_dict(), _DEFAULTS[command])
    if full_scale:
        d = merge(d, _FULL_SCALE[command])
    return ExperimentConfig.from_dict(d)


def load_config(path: Optional[str], command: str, full_scale: bool = False) -> ExperimentConfig:
    base = default_config(command, full_scale).to_dict()
    if path is None:
        return ExperimentConfig.from_dict(base)
    try:
        with open(path) as fh:
            user = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(user, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    for name, sec in user.items():
        if name not in _SECTIONS:
            raise ConfigError(f"unknown config section(s): {name}")
        if isinstance(sec, dict):
            bad = set(sec) - {f.name for f in fields(_SECTIONS[name])}
            if bad:
                raise ConfigError(f"{name}: unknown key(s) {', '.join(sorted(bad))}")
    return ExperimentConfig.from_dict(merge(base, user))
