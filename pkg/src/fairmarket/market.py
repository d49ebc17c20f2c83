"""Integral Fisher-market outcomes: spending, MBB sets, hierarchies and violators.

All quantities are exact. Bang-per-buck ratios are compared by
cross-multiplication, and a (value 0, price 0) ratio counts as 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Optional, Sequence

from .instance import Allocation, RoundedInstance, make_allocation

__all__ = [
    "MbbInfo",
    "MarketOutcome",
    "Hierarchy",
    "AlternatingPath",
    "spending",
    "mbb",
    "mbb_row",
    "least_spender",
    "build_hierarchy",
    "reconstruct_path",
    "is_eps_pEF1",
    "find_eps_path_violator",
]

ZERO = Fraction(0)


def spending(prices: Sequence[Fraction], bundle) -> Fraction:
    return sum((prices[j] for j in bundle), ZERO)


@dataclass(frozen=True)
class MbbInfo:
    alpha: Fraction
    goods: frozenset


def _ratio_gt(v1, p1, v2, p2) -> bool:
    """v1/p1 > v2/p2 for positive values; a zero price makes the ratio +inf."""
    if p1 == 0:
        return p2 != 0
    if p2 == 0:
        return False
    # integer cross-products: Fraction arithmetic would gcd-normalize huge operands
    v1, p1, v2, p2 = (Fraction(q) for q in (v1, p1, v2, p2))
    lhs = v1.numerator * p2.numerator * v2.denominator * p1.denominator
    rhs = v2.numerator * p1.numerator * v1.denominator * p2.denominator
    return lhs > rhs


def mbb_row(row: Sequence[Fraction], prices: Sequence[Fraction]) -> MbbInfo:
    """Maximum bang per buck for one agent's value row."""
    best = None
    goods = []
    for j, v in enumerate(row):
        if v == 0:
            continue
        if best is None or _ratio_gt(v, prices[j], row[best], prices[best]):
            best = j
            goods = [j]
        elif not _ratio_gt(row[best], prices[best], v, prices[j]):
            goods.append(j)
    if best is None:
        return MbbInfo(ZERO, frozenset())
    if prices[best] == 0:
        raise ValueError("maximum bang per buck is unbounded: a valued good has price 0")
    return MbbInfo(row[best] / prices[best], frozenset(goods))


def mbb(rounded: RoundedInstance, prices: Sequence[Fraction], agent: int) -> MbbInfo:
    return mbb_row(rounded.values[agent], prices)


@dataclass(frozen=True)
class MarketOutcome:
    """An integral allocation together with a price vector on a rounded instance."""

    rounded: RoundedInstance
    allocation: Allocation
    prices: tuple

    def __post_init__(self):
        object.__setattr__(self, "allocation", make_allocation(self.allocation))
        object.__setattr__(self, "prices", tuple(Fraction(p) for p in self.prices))
        if len(self.allocation) != self.rounded.n:
            raise ValueError("allocation must have one bundle per agent")
        if len(self.prices) != self.rounded.m:
            raise ValueError("price vector must have one entry per good")

    @property
    def n(self) -> int:
        return self.rounded.n

    @cached_property
    def owner(self) -> dict:
        return {j: i for i, bundle in enumerate(self.allocation) for j in bundle}

    @cached_property
    def spendings(self) -> tuple:
        return tuple(spending(self.prices, b) for b in self.allocation)

    @cached_property
    def mbb_infos(self) -> tuple:
        return tuple(mbb_row(row, self.prices) for row in self.rounded.values)

    def mbb_condition_holds(self) -> bool:
        return all(b <= info.goods for b, info in zip(self.allocation, self.mbb_infos))


def least_spender(outcome: MarketOutcome) -> int:
    """Agent with the smallest spending; ties go to the smallest index."""
    s = outcome.spendings
    return min(range(len(s)), key=lambda i: (s[i], i))


@dataclass(frozen=True)
class Hierarchy:
    """Agents reachable from ``root`` along alternating MBB / allocation edges.

    ``back_pointers[h] = (pred, good)`` records the lexicographically smallest
    witness that placed h one level below ``pred``: good is in MBB of pred and
    is owned by h.
    """

    root: int
    levels: tuple
    back_pointers: dict

    @cached_property
    def level_of(self) -> dict:
        return {h: lv for lv, members in enumerate(self.levels) for h in members}

    @property
    def members(self) -> frozenset:
        return frozenset(self.level_of)

    def __contains__(self, agent) -> bool:
        return agent in self.level_of


def build_hierarchy(root: int, outcome: MarketOutcome) -> Hierarchy:
    infos = outcome.mbb_infos
    owner = outcome.owner
    placed = {root}
    levels = [(root,)]
    back = {}
    while levels[-1]:
        nxt = []
        for h in levels[-1]:
            for g in sorted(infos[h].goods):
                k = owner.get(g)
                if k is None or k in placed:
                    continue
                placed.add(k)
                back[k] = (h, g)
                nxt.append(k)
        levels.append(tuple(sorted(nxt)))
    levels.pop()
    return Hierarchy(root, tuple(levels), back)


@dataclass(frozen=True)
class AlternatingPath:
    """Path root = agents[0], goods[0], agents[1], ..., goods[-1], agents[-1]."""

    agents: tuple
    goods: tuple

    @property
    def sequence(self) -> tuple:
        out = [self.agents[0]]
        for g, a in zip(self.goods, self.agents[1:]):
            out += [g, a]
        return tuple(out)

    def __len__(self) -> int:
        return 2 * len(self.goods)

    @property
    def last_good(self) -> int:
        return self.goods[-1]


def reconstruct_path(h: int, hier: Hierarchy) -> AlternatingPath:
    if h not in hier.back_pointers:
        raise KeyError(f"agent {h} is not a non-root member of the hierarchy")
    agents = [h]
    goods = []
    while agents[-1] != hier.root:
        pred, g = hier.back_pointers[agents[-1]]
        goods.append(g)
        agents.append(pred)
    return AlternatingPath(tuple(reversed(agents)), tuple(reversed(goods)))


def _removal_spending(outcome: MarketOutcome, k: int) -> Fraction:
    """min over j in x_k of p(x_k - j); 0 for an empty bundle."""
    bundle = outcome.allocation[k]
    if not bundle:
        return ZERO
    return outcome.spendings[k] - max(outcome.prices[j] for j in bundle)


def is_eps_pEF1(outcome: MarketOutcome, eps_factor=0) -> tuple:
    """(holds, violators) for price envy-freeness up to one good with slack eps_factor."""
    base = (1 + Fraction(eps_factor)) * outcome.spendings[least_spender(outcome)]
    violators = frozenset(
        k for k in range(outcome.n) if outcome.allocation[k] and _removal_spending(outcome, k) > base
    )
    return not violators, violators


def find_eps_path_violator(
    hier: Hierarchy, level: int, outcome: MarketOutcome, eps
) -> Optional[tuple]:
    """First member of ``level`` (by index) that is an eps-path-violator on its canonical path."""
    if level < 1 or level >= len(hier.levels):
        return None
    bound = (1 + Fraction(eps)) * outcome.spendings[hier.root]
    for h in hier.levels[level]:
        path = reconstruct_path(h, hier)
        if outcome.spendings[h] - outcome.prices[path.last_good] > bound:
            return h, path
    return None
