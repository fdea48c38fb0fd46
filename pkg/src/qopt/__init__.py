"""Constrained smooth quasar-convex optimization toolkit.

Solvers: an accelerated inexact proximal-point method with a noise-tolerant
binary line search, plus projected-gradient-descent and Frank-Wolfe baselines.
A verification harness certifies the structural properties every rate result
relies on (subproblem conditioning, envelope smoothness and quasar convexity,
descent and line-search certificates, rate envelopes) on a catalogue of test
problems.
"""

from .accel import (
    AccelParams,
    LineSearchParams,
    LineSearchResult,
    binary_line_search,
    check_linesearch_certificates,
    compute_schedule,
    ftrl_step,
    line_search_params,
    run_accelerated,
)
from .baselines import (
    attach_rate_bounds,
    gradient_mapping,
    level_set_diameter_estimate,
    run_frank_wolfe,
    run_pgd,
)
from .checks import CheckResult, VerificationReport, available_checks, verify
from .errors import (
    ConfigError,
    InvalidArgumentError,
    NumericalFailureError,
    PreconditionError,
)
from .harness import ExperimentConfig, load_config, run_experiment, sweep
from .objectives import (
    CATALOGUE_NAMES,
    Objective,
    OracleCounter,
    check_quasar_convexity,
    check_smoothness,
    evaluate,
    finite_diff_gradient,
    make_catalogue_objective,
)
from .prox import (
    ProxResult,
    check_descent_lemma,
    check_moreau_quasar,
    check_prox_conditioning,
    default_lambda,
    moreau_gradient,
    moreau_value,
    solve_prox_subproblem,
)
from .sets import Ball, Box, FeasibleSet, Simplex, contains, diameter, lmo, project, set_from_spec
from .trace import Trace, TraceRow, read_trace, write_trace

__version__ = "0.1.0"

__all__ = [
    "AccelParams",
    "Ball",
    "Box",
    "CATALOGUE_NAMES",
    "CheckResult",
    "ConfigError",
    "ExperimentConfig",
    "FeasibleSet",
    "InvalidArgumentError",
    "LineSearchParams",
    "LineSearchResult",
    "NumericalFailureError",
    "Objective",
    "OracleCounter",
    "PreconditionError",
    "ProxResult",
    "Simplex",
    "Trace",
    "TraceRow",
    "VerificationReport",
    "attach_rate_bounds",
    "available_checks",
    "binary_line_search",
    "check_descent_lemma",
    "check_linesearch_certificates",
    "check_moreau_quasar",
    "check_prox_conditioning",
    "check_quasar_convexity",
    "check_smoothness",
    "compute_schedule",
    "contains",
    "default_lambda",
    "diameter",
    "evaluate",
    "finite_diff_gradient",
    "ftrl_step",
    "gradient_mapping",
    "level_set_diameter_estimate",
    "line_search_params",
    "lmo",
    "load_config",
    "make_catalogue_objective",
    "moreau_gradient",
    "moreau_value",
    "project",
    "read_trace",
    "run_accelerated",
    "run_experiment",
    "run_frank_wolfe",
    "run_pgd",
    "set_from_spec",
    "solve_prox_subproblem",
    "sweep",
    "verify",
    "write_trace",
]
