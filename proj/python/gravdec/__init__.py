"""Python access to the gravdec experiment runner and diagnostics."""

from ._core import (
    EXIT_ERROR,
    EXIT_GUARD,
    EXIT_INVARIANT,
    EXIT_OK,
    EXIT_SCHEMA,
    Check,
    Config,
    ConfigError,
    GuardError,
    Outcome,
    Validation,
    compare_models,
    fit_decay_rate,
    lattice_covariance,
    run,
    validate,
    verify_identities,
)

__all__ = [
    "EXIT_ERROR",
    "EXIT_GUARD",
    "EXIT_INVARIANT",
    "EXIT_OK",
    "EXIT_SCHEMA",
    "Check",
    "Config",
    "ConfigError",
    "GuardError",
    "Outcome",
    "Validation",
    "compare_models",
    "fit_decay_rate",
    "lattice_covariance",
    "run",
    "validate",
    "verify_identities",
]
