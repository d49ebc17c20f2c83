"""Seeded benchmark: solve many small instances and re-check every output independently.

The report is a pure function of the flags. Wall-clock timings are kept out
of it (they would break byte-identical reruns) and go to a separate file on
request.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .generators import generate
from .io import rational_to_json, serialize_solution
from .solver import SolverConfig, solve
from .verify import (
    DEFAULT_BUDGET,
    EnumerationBudgetExceeded,
    audit_trace,
    brute_force_nash_opt,
    brute_force_pareto_dominator,
    check_eps_EF1,
    check_fpo_certificate,
    nsw_ratio_ok,
)

__all__ = ["BenchConfig", "case_shape", "run_case", "run_bench", "EVENT_HEADROOM", "IDENTICAL_FACTOR"]

EVENT_HEADROOM = 10**5
# e**(-1/e) ~ 0.6922, rounded down to a rational
IDENTICAL_FACTOR = Fraction(69, 100)


@dataclass(frozen=True)
class BenchConfig:
    seeds: int
    n_min: int = 2
    n_max: int = 4
    m_min: int = 2
    m_max: int = 7
    vmax: int = 10
    mode: str = "adaptive"
    family: str = "random"
    epsilon: Fraction = Fraction(1, 4)
    po_budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        if self.seeds < 1:
            raise ValueError("bench needs at least one seed")
        if not 1 <= self.n_min <= self.n_max:
            raise ValueError("need 1 <= n-min <= n-max")
        if not 1 <= self.m_min <= self.m_max or self.m_max < self.n_min:
            raise ValueError("need 1 <= m-min <= m-max and m-max >= n-min")
        if self.vmax < 1:
            raise ValueError("vmax must be positive")
        if self.family not in ("random", "identical"):
            raise ValueError(f"unknown family {self.family!r}")


def case_shape(cfg: BenchConfig, seed: int) -> tuple:
    """(n, m) for one seed, with m >= n so that random cases are Hall-feasible more often."""
    rng = np.random.default_rng([seed, 0xBE7C])
    n = int(rng.integers(cfg.n_min, cfg.n_max + 1))
    m = int(rng.integers(max(n, cfg.m_min), max(n, cfg.m_max) + 1))
    return n, m


def run_case(cfg: BenchConfig, seed: int) -> tuple:
    """Returns (record, solution, seconds)."""
    n, m = case_shape(cfg, seed)
    inst = generate(cfg.family, seed, n=n, m=m, vmax=cfg.vmax)
    config = SolverConfig(
        epsilon=cfg.epsilon, mode=cfg.mode, po_check_budget=cfg.po_budget, trace_enabled=True
    )
    start = time.perf_counter()
    sol = solve(inst, config)
    elapsed = time.perf_counter() - start

    ef1 = check_eps_EF1(inst, sol.allocation, 0)[0]
    fpo = check_fpo_certificate(sol.rounded, sol.allocation, sol.prices)
    audit = audit_trace(sol.trace, sol.market)
    try:
        po = brute_force_pareto_dominator(inst, sol.allocation, cfg.po_budget) is None
        _, opt = brute_force_nash_opt(inst, cfg.po_budget)
        opt_product = opt.product
    except EnumerationBudgetExceeded:
        po, opt_product = None, None

    alg_product = sol.nsw.product
    record = {
        "seed": seed,
        "name": inst.name,
        "n": n,
        "m": m,
        "epsilon_used": rational_to_json(sol.epsilon_used),
        "epsilon_attempts": len(sol.attempts),
        "events": sol.events,
        "ef1_exact": ef1,
        "po_brute_force": "skipped-budget" if po is None else ("confirmed" if po else "refuted"),
        "fpo_certificate_rounded": fpo,
        "audit_violations": [f"event {t}: {msg}" for t, msg in audit.violations],
        "nsw_product": str(alg_product),
        "nsw_opt_product": None if opt_product is None else str(opt_product),
    }
    checks = [ef1, po is not False, fpo, audit.ok, sol.events <= EVENT_HEADROOM]
    if opt_product:
        record["nsw_ratio_ok"] = nsw_ratio_ok(alg_product, opt_product, n)
        checks.append(record["nsw_ratio_ok"])
        if cfg.family == "identical" and ef1:
            record["nsw_identical_ok"] = nsw_ratio_ok(alg_product, opt_product, n, 1 / IDENTICAL_FACTOR)
            checks.append(record["nsw_identical_ok"])
    record["pass"] = all(checks)
    return record, sol, elapsed


def run_bench(cfg: BenchConfig, solutions_dir: Optional[str] = None) -> tuple:
    """Run every seed; returns (report dict, timings dict)."""
    cases, timings = [], {}
    for seed in range(cfg.seeds):
        record, sol, elapsed = run_case(cfg, seed)
        cases.append(record)
        timings[seed] = elapsed
        if solutions_dir is not None:
            os.makedirs(solutions_dir, exist_ok=True)
            with open(os.path.join(solutions_dir, f"case-{seed:05d}.json"), "w", encoding="utf-8") as fh:
                fh.write(serialize_solution(sol))
    cases.sort(key=lambda r: r["seed"])
    eps_used = sorted({Fraction(int(c["epsilon_used"]["num"]), int(c["epsilon_used"]["den"])) for c in cases})
    summary = {
        "cases": len(cases),
        "passed": sum(c["pass"] for c in cases),
        "failed_seeds": [c["seed"] for c in cases if not c["pass"]],
        "ef1_exact": sum(c["ef1_exact"] for c in cases),
        "po_confirmed": sum(c["po_brute_force"] == "confirmed" for c in cases),
        "po_skipped": sum(c["po_brute_force"] == "skipped-budget" for c in cases),
        "fpo_certificate": sum(c["fpo_certificate_rounded"] for c in cases),
        "audit_clean": sum(not c["audit_violations"] for c in cases),
        "nsw_ratio_checked": sum("nsw_ratio_ok" in c for c in cases),
        "nsw_ratio_ok": sum(c.get("nsw_ratio_ok", False) for c in cases),
        "max_events": max(c["events"] for c in cases),
        "epsilon_values_used": [rational_to_json(e) for e in eps_used],
        "flags": {
            "seeds": cfg.seeds, "n_min": cfg.n_min, "n_max": cfg.n_max, "m_min": cfg.m_min,
            "m_max": cfg.m_max, "vmax": cfg.vmax, "mode": cfg.mode, "family": cfg.family,
        },
    }
    return {"cases": cases, "summary": summary}, {"seconds_per_seed": timings, "total_seconds": sum(timings.values())}
