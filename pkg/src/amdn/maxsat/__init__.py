"""Weighted partial MaxSAT: instances, text formats and three solvers."""

from __future__ import annotations

from typing import Optional

from .exact import solve_exact
from .milp import solve_milp
from .sls import SlsParams, solve_sls
from .wcnf import Solution, WcnfInstance, read_model, read_wcnf, write_model, write_wcnf

METHODS = ("auto", "exact", "sls", "milp")

# branch and bound is only attempted below this many variables under "auto"
AUTO_EXACT_LIMIT = 40


def solve(
    instance: WcnfInstance,
    method: str = "auto",
    seed: int = 0,
    time_budget: Optional[float] = None,
    sls: SlsParams = SlsParams(),
) -> Solution:
    if method == "exact":
        return solve_exact(instance, time_budget)
    if method == "sls":
        return solve_sls(instance, seed, sls)
    if method == "milp":
        return solve_milp(instance, time_budget)
    if method == "auto":
        if instance.num_vars <= AUTO_EXACT_LIMIT:
            return solve_exact(instance, time_budget)
        return solve_milp(instance, time_budget)
    raise ValueError(f"unknown solver {method!r}; choose from {', '.join(METHODS)}")


__all__ = [
    "METHODS",
    "SlsParams",
    "Solution",
    "WcnfInstance",
    "read_model",
    "read_wcnf",
    "solve",
    "solve_exact",
    "solve_milp",
    "solve_sls",
    "write_model",
    "write_wcnf",
]
