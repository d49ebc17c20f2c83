"""Independent checkers and brute-force oracles.

The enumeration oracles walk all n**m assignments in lexicographic order of
the owner tuple ``(owner(good 0), owner(good 1), ...)`` and report the first
hit, so results are reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .instance import Allocation, RoundedInstance, make_allocation, power_table
from .market import mbb_row

__all__ = [
    "EnvyWitness",
    "NswValue",
    "AuditReport",
    "EnumerationBudgetExceeded",
    "DEFAULT_BUDGET",
    "check_eps_EF1",
    "ef1_slack",
    "check_delta_equivalence",
    "nsw",
    "brute_force_nash_opt",
    "brute_force_pareto_dominator",
    "brute_force_eps_pareto_dominator",
    "check_fpo_certificate",
    "audit_trace",
    "nsw_ratio_ok",
    "NSW_FACTOR",
]

DEFAULT_BUDGET = 200_000

# The 1.45 approximation factor, kept exact.
NSW_FACTOR = Fraction(29, 20)


class EnumerationBudgetExceeded(ValueError):
    pass


@dataclass(frozen=True)
class EnvyWitness:
    envious: int
    envied: int
    removed_good: int
    own_value: object
    remaining_value: object

    def describe(self) -> str:
        return (
            f"agent {self.envious + 1} envies agent {self.envied + 1}: "
            f"own value {self.own_value} < {self.remaining_value} "
            f"after removing good {self.removed_good + 1}"
        )


def _bundle_value(row, bundle):
    return sum(row[j] for j in bundle)


def _best_removal(row, bundle) -> int:
    return min(bundle, key=lambda j: (-row[j], j))


def check_eps_EF1(inst, x: Sequence, eps_factor=0) -> tuple:
    """Check (1+eps_factor)-EF1; returns (holds, first witness or None).

    ``inst`` is anything exposing a ``values`` matrix (Instance or
    RoundedInstance). eps_factor = 0 is exact EF1.
    """
    x = make_allocation(x)
    scale = 1 + Fraction(eps_factor)
    values = inst.values
    for i, row in enumerate(values):
        own = _bundle_value(row, x[i])
        for k, bundle in enumerate(x):
            if k == i or not bundle:
                continue
            j = _best_removal(row, bundle)
            rest = _bundle_value(row, bundle) - row[j]
            if scale * own < rest:
                return False, EnvyWitness(i, k, j, own, rest)
    return True, None


def ef1_slack(inst, x: Sequence) -> Optional[Fraction]:
    """Smallest f >= 0 such that x is f-EF1, or None if no finite f works."""
    x = make_allocation(x)
    worst = Fraction(0)
    for i, row in enumerate(inst.values):
        own = _bundle_value(row, x[i])
        for k, bundle in enumerate(x):
            if k == i or not bundle:
                continue
            rest = _bundle_value(row, bundle) - row[_best_removal(row, bundle)]
            if rest <= own:
                continue
            if own == 0:
                return None
            worst = max(worst, Fraction(rest) / Fraction(own) - 1)
    return worst


def check_delta_equivalence(inst, x: Sequence) -> bool:
    """delta-EF1 and EF1 agree at delta = 1/(2 m v_max) on integral instances."""
    delta = Fraction(1, 2 * inst.m * inst.v_max)
    return check_eps_EF1(inst, x, delta)[0] == check_eps_EF1(inst, x, 0)[0]


@dataclass(frozen=True)
class NswValue:
    """Exact product of bundle values; ``approx`` is the n-th root, for display only."""

    product: object
    n: int

    @property
    def approx(self) -> float:
        if self.product == 0:
            return 0.0
        p = Fraction(self.product)
        return math.exp((math.log(p.numerator) - math.log(p.denominator)) / self.n)

    def __lt__(self, other: "NswValue") -> bool:
        if self.n != other.n:
            raise ValueError("NSW values over different agent counts are not comparable")
        return self.product < other.product


def nsw(inst, x: Sequence) -> NswValue:
    x = make_allocation(x)
    product = 1
    for row, bundle in zip(inst.values, x):
        product *= _bundle_value(row, bundle)
    return NswValue(product, len(x))


def nsw_ratio_ok(alg_product, opt_product, n: int, factor: Fraction = NSW_FACTOR) -> bool:
    """alg * factor**n >= opt, compared exactly."""
    return Fraction(alg_product) * factor**n >= Fraction(opt_product)


# ---------------------------------------------------------------- enumeration


@lru_cache(maxsize=64)
def _assignments(n: int, m: int) -> np.ndarray:
    # Row r holds the owner of every good for the r-th assignment in
    # lexicographic order (good 0 is the most significant digit).
    idx = np.arange(n**m, dtype=np.int64)
    owners = np.empty((n**m, m), dtype=np.int8)
    for j in range(m - 1, -1, -1):
        owners[:, j] = idx % n
        idx //= n
    owners.setflags(write=False)
    return owners


def _integer_rows(values) -> list:
    """Scale a rational matrix to integers by one common positive factor."""
    dens = [Fraction(v).denominator for row in values for v in row]
    scale = math.lcm(*dens) if dens else 1
    return [[int(Fraction(v) * scale) for v in row] for row in values]


def _utilities(inst, budget: int) -> np.ndarray:
    n, m = inst.n, inst.m
    if n**m > budget:
        raise EnumerationBudgetExceeded(f"{n}**{m} assignments exceed the budget of {budget}")
    rows = _integer_rows(inst.values)
    big = max((sum(r) for r in rows), default=0) >= 2**62
    owners = _assignments(n, m)
    dtype = object if big else np.int64
    util = np.empty((owners.shape[0], n), dtype=dtype)
    for i, row in enumerate(rows):
        util[:, i] = np.where(owners == i, np.array(row, dtype=dtype), 0).sum(axis=1)
    return util, rows


def _allocation_from_row(owner_row, n: int) -> Allocation:
    bundles = [set() for _ in range(n)]
    for j, i in enumerate(owner_row):
        bundles[int(i)].add(j)
    return make_allocation(bundles)


def brute_force_nash_opt(inst, budget: int = DEFAULT_BUDGET) -> tuple:
    """Lexicographically first assignment maximizing the product of values."""
    util, rows = _utilities(inst, budget)
    n = inst.n
    bound = max((sum(r) for r in rows), default=0)
    if util.dtype != object and bound**n < 2**62:
        products = util.prod(axis=1)
    else:
        products = util.astype(object).prod(axis=1)
    best = int(np.argmax(products))
    x = _allocation_from_row(_assignments(n, inst.m)[best], n)
    return x, nsw(inst, x)


def _first_dominator(util, mine_scaled, better_scale) -> Optional[int]:
    lhs = util * better_scale[1]
    rhs = np.array([u * better_scale[0] for u in mine_scaled], dtype=util.dtype)
    mask = np.all(lhs >= rhs, axis=1) & np.any(lhs > rhs, axis=1)
    hits = np.flatnonzero(mask)
    return int(hits[0]) if hits.size else None


def brute_force_pareto_dominator(inst, x: Sequence, budget: int = DEFAULT_BUDGET) -> Optional[Allocation]:
    """First integral allocation Pareto dominating x, or None if x is PO."""
    return brute_force_eps_pareto_dominator(inst, x, 0, budget)


def brute_force_eps_pareto_dominator(
    inst, x: Sequence, eps=0, budget: int = DEFAULT_BUDGET
) -> Optional[Allocation]:
    """First integral allocation y with v_k(y_k) >= (1+eps) v_k(x_k) for all k, strict for one.

    Only integral dominators are searched; fractional ones are out of reach
    of enumeration.
    """
    x = make_allocation(x)
    util, rows = _utilities(inst, budget)
    mine = [sum(row[j] for j in bundle) for row, bundle in zip(rows, x)]
    factor = 1 + Fraction(eps)
    hit = _first_dominator(util, mine, (factor.numerator, factor.denominator))
    if hit is None:
        return None
    return _allocation_from_row(_assignments(inst.n, inst.m)[hit], inst.n)


# --------------------------------------------------------------- certificates


def check_fpo_certificate(rounded: RoundedInstance, x: Sequence, prices: Sequence) -> bool:
    """Market-equilibrium certificate: market clearing plus x_i within MBB_i."""
    x = make_allocation(x)
    prices = [Fraction(p) for p in prices]
    if len(x) != rounded.n or len(prices) != rounded.m:
        raise ValueError("allocation / price vector shape does not match the instance")
    if any(p < 0 for p in prices):
        return False
    counts = [0] * rounded.m
    for bundle in x:
        for j in bundle:
            if not 0 <= j < rounded.m:
                return False
            counts[j] += 1
    if any(c > 1 for c in counts):
        return False
    if any(p > 0 and c != 1 for p, c in zip(prices, counts)):
        return False
    try:
        infos = [mbb_row(row, prices) for row in rounded.values]
    except ValueError:
        return False
    return all(bundle <= info.goods for bundle, info in zip(x, infos))


@dataclass
class AuditReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, index, message):
        self.violations.append((index, message))


def audit_trace(trace, rounded: RoundedInstance) -> AuditReport:
    """Check the run-time invariants recorded in a solver trace.

    (1) least-spender spending never decreases, (2) every price rise is by a
    factor >= 1, and alpha1 / alpha3 rises are integral powers of 1+eps,
    (3) final prices are at most m**2 v'_max**3 and the total at most
    m**3 v'_max**3, (4) exactly one terminate event, placed last.
    """
    report = AuditReport()
    events = trace.events
    table = power_table(trace.epsilon)
    previous = None
    for t, event in enumerate(events):
        s = event.least_spender_spending
        if previous is not None and s < previous:
            report.add(t, f"least-spender spending dropped from {previous} to {s}")
        previous = s
        if event.kind == "price_rise":
            alpha = event.data["alpha"]
            if alpha < 1:
                report.add(t, f"price rise by alpha = {alpha} < 1")
            if event.data["rule"] in ("alpha1", "alpha3") and table.exact_log(alpha) is None:
                report.add(t, f"{event.data['rule']} rise {alpha} is not an integral power of 1+eps")
    terminates = [t for t, e in enumerate(events) if e.kind == "terminate"]
    if len(terminates) != 1:
        report.add(len(events) - 1 if events else 0, f"expected one terminate event, found {len(terminates)}")
    elif terminates[0] != len(events) - 1:
        report.add(terminates[0], "terminate event is not the last event")
    final_index = len(events) - 1
    m, vmax = rounded.m, rounded.v_max
    cap = m**2 * vmax**3
    for j, p in enumerate(trace.final_prices):
        if p > cap:
            report.add(final_index, f"final price of good {j + 1} is {p} > m^2 v'_max^3 = {cap}")
    if sum(trace.final_prices) > m**3 * vmax**3:
        report.add(final_index, "total final spending exceeds m^3 v'_max^3")
    return report
