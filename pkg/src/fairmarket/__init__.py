"""Exact EF1 + Pareto-optimal allocations of indivisible goods via integral Fisher markets."""

from .instance import Instance, RoundedInstance, hall_decomposition, round_instance, validate_instance
from .market import MarketOutcome, build_hierarchy, is_eps_pEF1, mbb
from .solver import Solution, SolverConfig, solve, solve_rounded
from .verify import (
    audit_trace,
    brute_force_nash_opt,
    brute_force_pareto_dominator,
    check_eps_EF1,
    check_fpo_certificate,
    nsw,
)
from .generators import generate, fixture

__all__ = [
    "Instance",
    "RoundedInstance",
    "MarketOutcome",
    "Solution",
    "SolverConfig",
    "solve",
    "solve_rounded",
    "validate_instance",
    "round_instance",
    "hall_decomposition",
    "mbb",
    "build_hierarchy",
    "is_eps_pEF1",
    "check_eps_EF1",
    "check_fpo_certificate",
    "brute_force_nash_opt",
    "brute_force_pareto_dominator",
    "audit_trace",
    "nsw",
    "generate",
    "fixture",
]
