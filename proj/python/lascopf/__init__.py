"""Look-ahead security-constrained OPF by nested proximal message passing."""

import json

from ._core import (
    BuildError,
    DivergenceError,
    InfeasibleError,
    ParseError,
    UsageError,
    ValidationError,
    alpha_at,
    case_summary,
    prox_generator_scalar,
    run_json,
    stop_threshold,
)

__all__ = [
    "BuildError",
    "DivergenceError",
    "InfeasibleError",
    "ParseError",
    "UsageError",
    "ValidationError",
    "alpha_at",
    "case_summary",
    "prox_generator_scalar",
    "solve",
    "stop_threshold",
]


def solve(case_path, mode="lascopf", horizon=None, contingencies=None, jobs=1, max_iter=20000, rolls=2):
    """Run a mode on a case file and return the summary as a dict."""
    if isinstance(contingencies, (list, tuple)):
        contingencies = ",".join(str(c) for c in contingencies) if contingencies else "none"
    text = run_json(str(case_path), mode, horizon, contingencies, jobs, max_iter, rolls)
    return json.loads(text)
