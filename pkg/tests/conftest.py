from fractions import Fraction

import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from fairmarket.instance import Instance

settings.register_profile(
    "repo", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("repo")


@st.composite
def small_instances(draw, max_n=3, max_m=5, vmax=6):
    n = draw(st.integers(1, max_n))
    m = draw(st.integers(1, max_m))
    rows = draw(st.lists(st.lists(st.integers(0, vmax), min_size=m, max_size=m), min_size=n, max_size=n))
    # every good needs a positive valuer
    for j in range(m):
        if all(row[j] == 0 for row in rows):
            rows[draw(st.integers(0, n - 1))][j] = draw(st.integers(1, vmax))
    return Instance(rows)


@st.composite
def allocations_for(draw, n, m, complete=True):
    owners = draw(st.lists(st.integers(0 if complete else -1, n - 1), min_size=m, max_size=m))
    bundles = [set() for _ in range(n)]
    for j, i in enumerate(owners):
        if i >= 0:
            bundles[i].add(j)
    return tuple(frozenset(b) for b in bundles)


epsilons = st.sampled_from([Fraction(1, 2), Fraction(1, 4), Fraction(1, 3), Fraction(2, 7), Fraction(1, 16)])


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
