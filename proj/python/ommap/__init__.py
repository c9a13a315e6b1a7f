"""Onsager-Machlup MAP estimation for diffusion paths."""

from ._core import (
    AssumptionReport,
    CheckResult,
    GridPath,
    MinimizationResult,
    MultistartReport,
    Problem,
    PowerLawFit,
    ball_prob,
    check_assumption,
    default_starts,
    drift_names,
    euler_maruyama,
    fit_power_law,
    h1_seminorm_sq,
    make_bridge,
    make_smoothing,
    make_unconditioned,
    minimize,
    multistart,
    psi,
    run_checks,
    version,
)

__all__ = [
    "AssumptionReport",
    "CheckResult",
    "GridPath",
    "MinimizationResult",
    "MultistartReport",
    "Problem",
    "PowerLawFit",
    "ball_prob",
    "check_assumption",
    "default_starts",
    "drift_names",
    "euler_maruyama",
    "fit_power_law",
    "h1_seminorm_sq",
    "make_bridge",
    "make_smoothing",
    "make_unconditioned",
    "minimize",
    "multistart",
    "psi",
    "run_checks",
    "version",
]
