"""EF1 + PO allocations through integral Fisher-market dynamics.

Starting from the welfare-maximizing allocation priced at the winning
rounded values, the solver alternates between

* swaps along alternating MBB / allocation paths of the least spender's
  hierarchy (prices fixed), and
* uniform price rises on the goods held by the hierarchy,

until the outcome is 3*eps-price-EF1. Every state keeps x_i within MBB_i, so
the final outcome is a market equilibrium of the rounded instance.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional

from .instance import (
    Instance,
    RoundedInstance,
    as_epsilon,
    hall_decomposition,
    make_allocation,
    power_table,
    round_instance,
    validate_instance,
)
from .market import (
    AlternatingPath,
    Hierarchy,
    MarketOutcome,
    build_hierarchy,
    find_eps_path_violator,
    is_eps_pEF1,
    least_spender,
)
from .verify import (
    DEFAULT_BUDGET,
    EnumerationBudgetExceeded,
    brute_force_pareto_dominator,
    check_eps_EF1,
    check_fpo_certificate,
    ef1_slack,
    nsw,
)

__all__ = [
    "INF",
    "SolverConfig",
    "AlphaTriple",
    "Event",
    "Trace",
    "Certificates",
    "Solution",
    "StepLimitExceeded",
    "SolverInvariantError",
    "InvalidInstanceError",
    "phase1_init",
    "compute_alphas",
    "solve_rounded",
    "solve",
    "theorem_epsilon",
]

log = logging.getLogger(__name__)

INF = math.inf
MODES = ("fixed", "adaptive", "exact-theorem")


class StepLimitExceeded(RuntimeError):
    pass


class SolverInvariantError(RuntimeError):
    """A state the correctness argument rules out; always a bug."""


class InvalidInstanceError(ValueError):
    def __init__(self, report):
        super().__init__("; ".join(report.violations))
        self.report = report


@dataclass(frozen=True)
class SolverConfig:
    epsilon: Fraction = Fraction(1, 4)
    mode: str = "adaptive"
    max_steps: int = 10**6
    po_check_budget: int = DEFAULT_BUDGET
    trace_enabled: bool = False
    debug_checks: bool = False

    def __post_init__(self):
        object.__setattr__(self, "epsilon", as_epsilon(self.epsilon))
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


def theorem_epsilon(inst: Instance) -> Fraction:
    return Fraction(1, 14 * inst.m**3 * inst.v_max**4)


@dataclass(frozen=True)
class AlphaTriple:
    alpha1: object
    alpha2: object
    alpha3: object

    @property
    def chosen(self) -> str:
        # ties: alpha2 (terminate) before alpha1 before alpha3
        options = [(self.alpha2, 0, "alpha2"), (self.alpha1, 1, "alpha1"), (self.alpha3, 2, "alpha3")]
        return min(options, key=lambda t: (t[0], t[1]))[2]

    @property
    def alpha(self):
        return getattr(self, self.chosen)


@dataclass(frozen=True)
class Event:
    """One solver time step.

    ``kind`` is swap / identity_change / price_rise / terminate; ``data`` holds
    the kind-specific fields (0-based indices).
    """

    kind: str
    data: dict
    least_spender_spending: Fraction


@dataclass
class Trace:
    epsilon: Fraction
    initial_prices: tuple = ()
    final_prices: tuple = ()
    events: list = field(default_factory=list)
    steps: int = 0


def phase1_init(rounded: RoundedInstance) -> MarketOutcome:
    """Give each good to its highest (rounded) valuer and price it at that value."""
    values = rounded.values
    bundles = [set() for _ in range(rounded.n)]
    prices = []
    for j in range(rounded.m):
        winner = min(range(rounded.n), key=lambda i: (-values[i][j], i))
        if values[winner][j] == 0:
            raise ValueError(f"good {j + 1} is valued by no agent")
        bundles[winner].add(j)
        prices.append(values[winner][j])
    return MarketOutcome(rounded, bundles, prices)


def compute_alphas(outcome: MarketOutcome, hier: Hierarchy, eps) -> AlphaTriple:
    """The three candidate price-rise factors for the hierarchy's goods.

    alpha1: smallest rise making a good outside the hierarchy MBB for a member.
    alpha2: rise after which the least spender no longer price-envies anyone
            outside the hierarchy up to one good.
    alpha3: smallest power of 1+eps lifting the least spender strictly above
            the cheapest agent outside the hierarchy.
    Empty ranges give INF. With a zero-spending root alpha2 and alpha3 are INF
    (raising prices cannot move a zero spending).
    """
    root = hier.root
    members = hier.members
    values = outcome.rounded.values
    prices = outcome.prices
    held = {j for h in members for j in outcome.allocation[h]}
    outside_goods = [j for j in range(len(prices)) if j not in held]

    alpha1 = INF
    for h in sorted(members):
        best = outcome.mbb_infos[h].alpha
        for j in outside_goods:
            v = values[h][j]
            if v > 0:
                alpha1 = min(alpha1, best * prices[j] / v)

    outsiders = [k for k in range(outcome.n) if k not in members]
    root_spend = outcome.spendings[root]
    alpha2 = alpha3 = INF
    if outsiders and root_spend > 0:
        worst = Fraction(0)
        for k in outsiders:
            bundle = outcome.allocation[k]
            if bundle:
                worst = max(worst, outcome.spendings[k] - max(prices[j] for j in bundle))
        alpha2 = worst / root_spend
        cheapest = min(outcome.spendings[k] for k in outsiders)
        table = power_table(eps)
        alpha3 = table[table.exponent_above(cheapest / root_spend)]
    triple = AlphaTriple(alpha1, alpha2, alpha3)
    if triple.alpha == INF:
        raise SolverInvariantError("all price-rise factors are unbounded")
    return triple


def _with_allocation(outcome: MarketOutcome, bundles) -> MarketOutcome:
    nxt = MarketOutcome(outcome.rounded, bundles, outcome.prices)
    # prices did not move, so the MBB sets carry over
    nxt.__dict__["mbb_infos"] = outcome.mbb_infos
    return nxt


class _Run:
    def __init__(self, rounded: RoundedInstance, eps: Fraction, config: SolverConfig):
        self.eps = eps
        self.config = config
        self.steps = 0
        self.trace = Trace(eps)
        self.outcome = phase1_init(rounded)
        self.trace.initial_prices = self.outcome.prices
        self.leader = least_spender(self.outcome)

    def emit(self, kind: str, **data) -> None:
        self.steps += 1
        spend = self.outcome.spendings[least_spender(self.outcome)]
        if self.config.trace_enabled:
            self.trace.events.append(Event(kind, data, spend))
        if self.config.debug_checks:
            self._check_state()
        if self.steps >= self.config.max_steps and kind != "terminate":
            raise StepLimitExceeded(f"no termination within {self.config.max_steps} events")

    def refresh_leader(self) -> int:
        new = least_spender(self.outcome)
        if new != self.leader:
            old, self.leader = self.leader, new
            self.emit("identity_change", old=old, new=new)
        return new

    def _check_state(self) -> None:
        outcome = self.outcome
        seen = [j for b in outcome.allocation for j in b]
        if sorted(seen) != list(range(outcome.rounded.m)):
            raise SolverInvariantError("allocation is not a partition of the goods")
        if not outcome.mbb_condition_holds():
            raise SolverInvariantError("some agent holds a good outside its MBB set")

    def pef1(self) -> bool:
        return is_eps_pEF1(self.outcome, 3 * self.eps)[0]

    def swap(self, h: int, path: AlternatingPath, level: int) -> None:
        good = path.last_good
        pred = path.agents[-2]
        bundles = [set(b) for b in self.outcome.allocation]
        bundles[h].discard(good)
        bundles[pred].add(good)
        self.outcome = _with_allocation(self.outcome, bundles)
        self.emit("swap", source=h, target=pred, good=good, level=level)

    def raise_prices(self, hier: Hierarchy) -> str:
        alphas = compute_alphas(self.outcome, hier, self.eps)
        rule, alpha = alphas.chosen, alphas.alpha
        if alpha < 1:
            raise SolverInvariantError(f"{rule} = {alpha} < 1")
        goods = sorted(j for h in hier.members for j in self.outcome.allocation[h])
        prices = list(self.outcome.prices)
        for j in goods:
            prices[j] *= alpha
        self.outcome = MarketOutcome(self.outcome.rounded, self.outcome.allocation, prices)
        self.emit("price_rise", alpha=alpha, rule=rule, goods=tuple(goods))
        return rule

    def finish(self, reason: str) -> None:
        self.emit("terminate", reason=reason)
        self.trace.final_prices = self.outcome.prices

    def run(self) -> None:
        if self.pef1():
            self.finish("pEF1-at-init")
            return
        while True:
            root = self.leader
            hier = build_hierarchy(root, self.outcome)
            level = 1
            swapped = False
            while level < len(hier.levels) and not self.pef1():
                hit = find_eps_path_violator(hier, level, self.outcome, self.eps)
                if hit is None:
                    level += 1
                    continue
                self.swap(*hit, level)
                self.refresh_leader()
                swapped = True
                break
            if swapped:
                continue
            if self.pef1():
                self.finish("pEF1-after-phase2")
                return
            rule = self.raise_prices(hier)
            if rule == "alpha2":
                self.refresh_leader()
                self.finish("alpha2")
                return
            self.refresh_leader()


def solve_rounded(rounded: RoundedInstance, eps=None, config: Optional[SolverConfig] = None) -> tuple:
    """Run the market dynamics on a power-of-(1+eps) instance.

    Returns ``(outcome, trace)``. The trace keeps per-event records only when
    ``config.trace_enabled``; ``trace.steps`` always counts the events.
    """
    eps = rounded.epsilon if eps is None else as_epsilon(eps)
    config = config or SolverConfig(epsilon=eps)
    run = _Run(rounded, eps, config)
    run.run()
    run.trace.steps = run.steps
    return run.outcome, run.trace


@dataclass(frozen=True)
class Certificates:
    ef1_exact: bool
    eps_ef1_rounded: Optional[Fraction]
    fpo_certificate_rounded: bool
    po_brute_force: str  # confirmed / refuted / skipped-budget

    @property
    def all_pass(self) -> bool:
        return self.ef1_exact and self.fpo_certificate_rounded and self.po_brute_force != "refuted"


@dataclass(frozen=True)
class Solution:
    instance: Instance
    allocation: tuple
    prices: tuple
    epsilon_used: Fraction
    matched_agents: frozenset
    certificates: Certificates
    events: int
    rounded: RoundedInstance
    attempts: tuple = ()
    trace: Optional[Trace] = None

    @property
    def nsw(self):
        return nsw(self.instance, self.allocation)

    @property
    def market(self) -> RoundedInstance:
        """The rounded instance on the matched agents, where the dynamics ran."""
        return self.rounded.restrict(sorted(self.matched_agents))


def _certify(inst: Instance, rounded: RoundedInstance, allocation, prices, budget: int) -> Certificates:
    ef1 = check_eps_EF1(inst, allocation, 0)[0]
    try:
        dominator = brute_force_pareto_dominator(inst, allocation, budget)
        po = "refuted" if dominator is not None else "confirmed"
    except EnumerationBudgetExceeded:
        po = "skipped-budget"
    return Certificates(
        ef1_exact=ef1,
        eps_ef1_rounded=ef1_slack(rounded, allocation),
        fpo_certificate_rounded=check_fpo_certificate(rounded, allocation, prices),
        po_brute_force=po,
    )


def _attempt(inst: Instance, agents: list, eps: Fraction, config: SolverConfig) -> Solution:
    rounded = round_instance(inst, eps)
    market = rounded.restrict(agents)
    outcome, trace = solve_rounded(market, eps, replace(config, epsilon=eps))
    bundles = [frozenset()] * inst.n
    for pos, agent in enumerate(agents):
        bundles[agent] = outcome.allocation[pos]
    allocation = make_allocation(bundles)
    certs = _certify(inst, rounded, allocation, outcome.prices, config.po_check_budget)
    return Solution(
        instance=inst,
        allocation=allocation,
        prices=outcome.prices,
        epsilon_used=eps,
        matched_agents=frozenset(agents),
        certificates=certs,
        events=trace.steps,
        rounded=rounded,
        attempts=(eps,),
        trace=trace if config.trace_enabled else None,
    )


def solve(inst: Instance, config: Optional[SolverConfig] = None) -> Solution:
    """Validate, strip Hall violators, round, run the dynamics and certify.

    ``adaptive`` mode starts at eps = 1/4 and halves eps until the allocation
    is EF1 for the original instance and no integral Pareto dominator exists
    (the latter only when n**m fits the PO budget). Both are guaranteed once
    eps drops to 1/(14 m**3 v_max**4), which bounds the schedule.
    """
    config = config or SolverConfig()
    report = validate_instance(inst)
    if not report.ok:
        raise InvalidInstanceError(report)
    matched, _ = hall_decomposition(inst)
    agents = sorted(matched)

    if config.mode == "fixed":
        return _attempt(inst, agents, config.epsilon, config)
    if config.mode == "exact-theorem":
        return _attempt(inst, agents, theorem_epsilon(inst), config)

    floor = theorem_epsilon(inst)
    eps = Fraction(1, 4)
    tried = []
    while True:
        sol = _attempt(inst, agents, eps, config)
        tried.append(eps)
        certs = sol.certificates
        if certs.ef1_exact and certs.po_brute_force != "refuted":
            return replace(sol, attempts=tuple(tried))
        log.debug("eps=%s rejected (ef1=%s, po=%s)", eps, certs.ef1_exact, certs.po_brute_force)
        if eps <= floor:
            raise SolverInvariantError(f"allocation still not EF1+PO at eps = {eps}")
        eps /= 2
