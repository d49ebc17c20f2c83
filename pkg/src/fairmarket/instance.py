"""Fair-division instances, exact power-of-(1+eps) rounding and Hall preprocessing.

Agents and goods are 0-based everywhere inside the library. Human-facing
output (JSON files, CLI messages) converts to 1-based indices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Optional, Sequence, Union

__all__ = [
    "Instance",
    "RoundedInstance",
    "Allocation",
    "ValidationReport",
    "PowerTable",
    "as_epsilon",
    "validate_instance",
    "round_up_value",
    "round_instance",
    "hall_decomposition",
    "power_table",
]

RationalLike = Union[Fraction, int, str]

# A bundle list: bundles[i] is the frozenset of goods held by agent i.
Allocation = tuple


def as_epsilon(value: RationalLike) -> Fraction:
    """Coerce ``value`` to a Fraction strictly inside (0, 1)."""
    if isinstance(value, float):
        raise TypeError("epsilon must be exact (Fraction, int or 'a/b' string), not float")
    eps = Fraction(value)
    if not 0 < eps < 1:
        raise ValueError(f"epsilon must lie in the open interval (0, 1), got {eps}")
    return eps


def make_allocation(bundles: Sequence) -> Allocation:
    return tuple(frozenset(b) for b in bundles)


@dataclass(frozen=True)
class Instance:
    """An additive fair-division instance with integral valuations.

    ``valuations[i][j]`` is agent i's value for good j. The constructor only
    enforces a rectangular integer matrix; the modelling assumptions are
    checked by :func:`validate_instance` so that invalid inputs can still be
    represented and reported on.
    """

    valuations: tuple
    name: Optional[str] = None

    def __post_init__(self):
        rows = tuple(tuple(row) for row in self.valuations)
        widths = {len(row) for row in rows}
        if len(widths) > 1:
            raise ValueError("valuation matrix is not rectangular")
        for row in rows:
            for v in row:
                if isinstance(v, bool) or not isinstance(v, int):
                    raise TypeError(f"valuations must be integers, got {v!r}")
        object.__setattr__(self, "valuations", rows)

    @property
    def n(self) -> int:
        return len(self.valuations)

    @property
    def m(self) -> int:
        return len(self.valuations[0]) if self.valuations else 0

    @property
    def values(self) -> tuple:
        # Common accessor shared with RoundedInstance, used by the checkers.
        return self.valuations

    @cached_property
    def v_max(self) -> int:
        return max((v for row in self.valuations for v in row), default=0)

    def value(self, agent: int, bundle) -> int:
        row = self.valuations[agent]
        return sum(row[j] for j in bundle)

    def restrict(self, agents: Sequence[int]) -> "Instance":
        """Sub-instance on ``agents`` (all goods kept), preserving their order."""
        return Instance(tuple(self.valuations[i] for i in agents), self.name)


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate_instance(inst: Instance) -> ValidationReport:
    """Report every broken modelling assumption (1-based indices in messages).

    Agents that value nothing are allowed; they are Hall violators and get
    handled by :func:`hall_decomposition`. Goods that nobody values are not.
    """
    report = ValidationReport()
    if inst.n == 0 or inst.m == 0:
        report.violations.append("instance has no agents or no goods")
        return report
    for i, row in enumerate(inst.valuations):
        for j, v in enumerate(row):
            if v < 0:
                report.violations.append(f"negative valuation at ({i + 1},{j + 1})")
    for j in range(inst.m):
        if all(inst.valuations[i][j] <= 0 for i in range(inst.n)):
            report.violations.append(f"good {j + 1} valued by no agent")
    return report


class PowerTable:
    """Exact powers of ``1 + eps``, cached sparsely.

    Exponent searches start from a floating-point estimate and are then
    settled by exact comparisons, so only a handful of powers are built per
    query. Tiny eps makes the exponents (and the bit length of each power)
    grow like ln(v)/eps.
    """

    def __init__(self, eps: RationalLike):
        self.eps = as_epsilon(eps)
        self.base = 1 + self.eps
        self._log_base = math.log1p(float(self.eps))
        self._cache: dict = {0: Fraction(1)}

    def __getitem__(self, a: int) -> Fraction:
        if a < 0:
            return 1 / self[-a]
        power = self._cache.get(a)
        if power is None:
            power = self._cache[a] = self.base**a
        return power

    def _estimate(self, value) -> int:
        value = Fraction(value)
        logv = math.log(value.numerator) - math.log(value.denominator)
        return max(0, int(logv / self._log_base))

    def ceil_exponent(self, value) -> int:
        """Smallest integer a >= 0 with (1+eps)**a >= value."""
        a = self._estimate(value)
        while self[a] < value:
            a += 1
        while a > 0 and self[a - 1] >= value:
            a -= 1
        return a

    def exponent_above(self, value) -> int:
        """Smallest integer s >= 0 with (1+eps)**s > value."""
        s = self._estimate(value)
        while self[s] <= value:
            s += 1
        while s > 0 and self[s - 1] > value:
            s -= 1
        return s

    def exact_log(self, value) -> Optional[int]:
        """Integer s with (1+eps)**s == value, or None if value is no such power."""
        value = Fraction(value)
        if value <= 0:
            return None
        if value < 1:
            s = self.exact_log(1 / value)
            return None if s is None else -s
        s = self.ceil_exponent(value)
        return s if self[s] == value else None


_TABLES: dict = {}


def power_table(eps: RationalLike) -> PowerTable:
    eps = as_epsilon(eps)
    table = _TABLES.get(eps)
    if table is None:
        table = _TABLES[eps] = PowerTable(eps)
    return table


def round_up_value(v: int, eps: RationalLike) -> Optional[int]:
    """Exponent of the rounded value: None for v = 0, else min a with (1+eps)**a >= v."""
    if v < 0:
        raise ValueError("valuations must be non-negative")
    if v == 0:
        return None
    return power_table(eps).ceil_exponent(v)


@dataclass(frozen=True)
class RoundedInstance:
    """An instance whose positive values are rounded up to powers of ``1 + eps``.

    ``exponents[i][j]`` is None where the original value is 0, else the
    exponent a with rounded value (1+eps)**a.
    """

    base: Instance
    epsilon: Fraction
    exponents: tuple

    @property
    def n(self) -> int:
        return len(self.exponents)

    @property
    def m(self) -> int:
        return self.base.m

    @cached_property
    def values(self) -> tuple:
        table = power_table(self.epsilon)
        return tuple(
            tuple(Fraction(0) if a is None else table[a] for a in row)
            for row in self.exponents
        )

    @cached_property
    def v_max(self) -> Fraction:
        return max((v for row in self.values for v in row), default=Fraction(0))

    def value(self, agent: int, bundle) -> Fraction:
        row = self.values[agent]
        return sum((row[j] for j in bundle), Fraction(0))

    def restrict(self, agents: Sequence[int]) -> "RoundedInstance":
        return RoundedInstance(
            self.base.restrict(agents),
            self.epsilon,
            tuple(self.exponents[i] for i in agents),
        )


def round_instance(inst: Instance, eps: RationalLike) -> RoundedInstance:
    eps = as_epsilon(eps)
    exponents = tuple(tuple(round_up_value(v, eps) for v in row) for row in inst.valuations)
    return RoundedInstance(inst, eps, exponents)


def hall_decomposition(inst: Instance) -> tuple:
    """Maximum matching on the positive-value graph.

    Returns ``(matched_agents, matching)`` where ``matching`` maps agent to
    good. Agents are processed in increasing index and each augmenting-path
    search scans goods in increasing index, so the result is deterministic.
    All agents are matched iff the instance satisfies Hall's condition.
    """
    adjacency = [[j for j, v in enumerate(row) if v > 0] for row in inst.valuations]
    owner_of: dict = {}

    def augment(agent: int, seen: set) -> bool:
        for good in adjacency[agent]:
            if good in seen:
                continue
            seen.add(good)
            holder = owner_of.get(good)
            if holder is None or augment(holder, seen):
                owner_of[good] = agent
                return True
        return False

    for agent in range(inst.n):
        augment(agent, set())
    matching = {agent: good for good, agent in owner_of.items()}
    matching = dict(sorted(matching.items()))
    return frozenset(matching), matching
