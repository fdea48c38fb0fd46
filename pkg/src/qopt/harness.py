"""Experiment configs, the trace-emitting runner, and parameter sweeps.

Config format (JSON)::

    {
      "algorithm": "accelerated" | "pgd" | "frank_wolfe",
      "objective": "example1" | {"name": "quadratic", "params": {...}},
      "set": {...},                # optional override where the objective allows it
      "x0": "vertex" | "center" | [..],
      "epsilon": 1e-3,             # required for accelerated
      "T": 1000,                   # baselines take exactly one of epsilon/T
      "seed": 0,
      "output_path": "trace.csv"
    }

The env var ``QOPT_SEED`` overrides ``seed``.  Identical config + seed yields
byte-identical trace files.
"""

from __future__ import annotations

import itertools
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .accel import run_accelerated
from .baselines import attach_rate_bounds, run_frank_wolfe, run_pgd
from .errors import ConfigError, InvalidArgumentError, NumericalFailureError, PreconditionError
from .objectives import OracleCounter, make_catalogue_objective
from .sets import as_point
from .trace import write_trace

ALGORITHMS = ("accelerated", "pgd", "frank_wolfe")

#: Rows with a smaller gap are dropped from log-log fits (log of ~0 is noise).
GAP_FIT_FLOOR = 1e-13


@dataclass
class ExperimentConfig:
    algorithm: str
    objective_name: str
    objective_params: dict
    set_spec: Optional[dict]
    x0: Union[str, list]
    epsilon: Optional[float]
    T: Optional[int]
    seed: int
    output_path: Optional[str]
    raw: dict

    def replace(self, **overrides):
        raw = dict(self.raw)
        raw.update(overrides)
        return load_config(raw)


def load_config(source):
    """Parse and validate a config from a dict, a JSON string, or a file path."""
    if isinstance(source, (str, Path)):
        with open(source) as fh:
            raw = json.load(fh)
    else:
        raw = dict(source)

    if "algorithm" not in raw:
        raise ConfigError("algorithm", "missing")
    algorithm = raw["algorithm"]
    if algorithm not in ALGORITHMS:
        raise ConfigError("algorithm", f"unknown '{algorithm}'; expected one of {ALGORITHMS}")

    objective = raw.get("objective")
    if objective is None:
        raise ConfigError("objective", "missing")
    if isinstance(objective, str):
        name, params = objective, {}
    elif isinstance(objective, dict) and "name" in objective:
        name, params = objective["name"], dict(objective.get("params", {}))
    else:
        raise ConfigError("objective", "expected a name or {'name': ..., 'params': {...}}")

    set_spec = raw.get("set")
    if set_spec is not None and not isinstance(set_spec, dict):
        raise ConfigError("set", "expected a set spec mapping")
    if "dim" in raw:  # shorthand: top-level dim feeds the objective params
        params["dim"] = raw["dim"]

    epsilon = raw.get("epsilon")
    T = raw.get("T")
    if epsilon is not None and not (isinstance(epsilon, (int, float)) and epsilon > 0):
        raise ConfigError("epsilon", "must be a positive number")
    if T is not None and not (isinstance(T, int) and T >= 1):
        raise ConfigError("T", "must be a positive integer")
    if algorithm == "accelerated":
        if epsilon is None:
            raise ConfigError("epsilon", "required for the accelerated algorithm")
        if T is not None:
            raise ConfigError("T", "the accelerated algorithm derives T from epsilon")
    else:
        if (epsilon is None) == (T is None):
            raise ConfigError("T", "baselines take exactly one of epsilon/T")

    seed = raw.get("seed", 0)
    env_seed = os.environ.get("QOPT_SEED")
    if env_seed is not None:
        seed = int(env_seed)
    if not isinstance(seed, int):
        raise ConfigError("seed", "must be an integer")

    x0 = raw.get("x0", "vertex")
    if not (isinstance(x0, (list, str))):
        raise ConfigError("x0", "expected 'vertex', 'center', or an explicit vector")

    return ExperimentConfig(
        algorithm=algorithm,
        objective_name=name,
        objective_params=params,
        set_spec=set_spec,
        x0=x0,
        epsilon=epsilon,
        T=T,
        seed=seed,
        output_path=raw.get("output_path"),
        raw=raw,
    )


def build_objective(config):
    params = dict(config.objective_params)
    if config.set_spec is not None:
        params["set"] = config.set_spec
    try:
        return make_catalogue_objective(config.objective_name, params)
    except InvalidArgumentError as exc:
        raise ConfigError("objective", str(exc)) from exc


def resolve_x0(set_, spec):
    if isinstance(spec, str):
        if spec == "vertex":
            return set_.canonical_vertex()
        if spec == "center":
            return set_.center_point()
        raise ConfigError("x0", f"unknown rule '{spec}'")
    try:
        x0 = as_point(spec, set_.dimension)
    except InvalidArgumentError as exc:
        raise ConfigError("x0", str(exc)) from exc
    if not set_.contains(x0, 1e-9):
        raise ConfigError("x0", "explicit starting point is infeasible")
    return x0


def baseline_iterations(config, obj):
    """Resolve T for a baseline: given directly, or converted from epsilon."""
    if config.T is not None:
        return config.T
    constant = 20.0 if config.algorithm == "pgd" else 6.0
    L = obj.smoothness_L
    D = obj.feasible_set.diameter()
    gamma = obj.quasar_gamma
    return max(1, math.ceil(constant * L * D * D / (gamma * gamma * config.epsilon) - 1.0))


def run_experiment(config, output_path=None):
    """Run one configured experiment; write its trace CSV when a path is known.

    Returns the trace.  On numerical failure the partial trace is flushed with
    a failure marker row and the error is re-raised for the caller to map to
    an exit code.
    """
    if not isinstance(config, ExperimentConfig):
        config = load_config(config)
    obj = build_objective(config)
    x0 = resolve_x0(obj.feasible_set, config.x0)
    counter = OracleCounter()
    path = output_path or config.output_path

    try:
        if config.algorithm == "accelerated":
            trace = run_accelerated(obj, x0, config.epsilon, counter)
        elif config.algorithm == "pgd":
            trace = run_pgd(obj, x0, baseline_iterations(config, obj), counter)
        else:
            trace = run_frank_wolfe(obj, x0, baseline_iterations(config, obj), counter)
    except PreconditionError as exc:
        raise ConfigError("x0", str(exc)) from exc
    except NumericalFailureError as exc:
        partial = getattr(exc, "partial_trace", None)
        if partial is not None and path is not None:
            partial.header["config"] = config.raw
            partial.header["seed"] = config.seed
            write_trace(partial, path)
        raise

    if config.algorithm in ("pgd", "frank_wolfe"):
        attach_rate_bounds(trace, obj.smoothness_L, obj.quasar_gamma,
                           obj.feasible_set.diameter())
    trace.header["config"] = config.raw
    trace.header["seed"] = config.seed
    assert trace.final_oracle_calls == counter.calls  # no hidden evaluations
    if path is not None:
        write_trace(trace, path)
    return trace


# -- sweeps --------------------------------------------------------------------

_SWEEPABLE = ("epsilon", "T", "seed")


def fit_loglog(xs, ys):
    """Least-squares slope/intercept of log10(y) against log10(x)."""
    lx = np.log10(np.asarray(xs, dtype=float))
    ly = np.log10(np.asarray(ys, dtype=float))
    slope, intercept = np.polyfit(lx, ly, 1)
    return float(slope), float(intercept)


def _gap_fit_points(trace):
    pts = [
        (row.iteration, row.gap)
        for row in trace.rows
        if row.iteration >= 1 and row.gap is not None and row.gap > GAP_FIT_FLOOR
    ]
    return pts


def sweep(config, grid, out_dir):
    """Run one experiment per grid point and fit the observed scaling laws.

    ``grid`` maps sweepable config fields (epsilon, T, seed) to value lists;
    the cartesian product is run.  Traces land in ``out_dir`` along with a
    ``summary.json`` holding per-run facts and per-algorithm log-log fits:
    gap-versus-iteration for the baselines, total oracle calls versus epsilon
    for the accelerated method.
    """
    if not isinstance(config, ExperimentConfig):
        config = load_config(config)
    if not isinstance(grid, dict) or not grid:
        raise ConfigError("grid", "must be a nonempty mapping of parameter lists")
    for key, values in grid.items():
        if key not in _SWEEPABLE:
            raise ConfigError("grid", f"unknown sweep parameter '{key}'")
        if not isinstance(values, (list, tuple)) or not values:
            raise ConfigError("grid", f"parameter '{key}' needs a nonempty list")

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    keys = sorted(grid)
    runs = []
    gap_points = []
    calls_points = []
    for i, combo in enumerate(itertools.product(*(grid[k] for k in keys))):
        overrides = dict(zip(keys, combo))
        run_cfg_raw = dict(config.raw)
        # epsilon and T are mutually exclusive; sweeping one drops the other.
        if "epsilon" in overrides:
            run_cfg_raw.pop("T", None)
        if "T" in overrides:
            run_cfg_raw.pop("epsilon", None)
        run_cfg_raw.update(overrides)
        run_cfg_raw.pop("output_path", None)
        run_cfg = load_config(run_cfg_raw)
        path = out_dir / f"run_{i:03d}.csv"
        trace = run_experiment(run_cfg, output_path=path)
        runs.append(
            {
                "params": overrides,
                "path": str(path),
                "algorithm": config.algorithm,
                "final_gap": trace.final_gap,
                "oracle_calls": trace.final_oracle_calls,
                "rows": len(trace.rows),
            }
        )
        gap_points.extend(_gap_fit_points(trace))
        if config.algorithm == "accelerated":
            calls_points.append((run_cfg.epsilon, trace.final_oracle_calls))

    fits = {}
    if config.algorithm in ("pgd", "frank_wolfe") and len(gap_points) >= 2:
        slope, intercept = fit_loglog(*zip(*gap_points))
        fits[config.algorithm] = {"slope": slope, "intercept": intercept}
    if config.algorithm == "accelerated" and len(calls_points) >= 2:
        slope, intercept = fit_loglog(*zip(*calls_points))
        fits["accelerated"] = {"slope": slope, "intercept": intercept}

    summary = {"runs": runs, "fits": fits}
    with open(out_dir / "summary.json", "w") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2)
    return summary
