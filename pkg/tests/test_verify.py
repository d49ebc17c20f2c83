import itertools
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fairmarket.generators import fixture, generate
from fairmarket.instance import Instance, hall_decomposition, make_allocation, round_instance
from fairmarket.market import MarketOutcome
from fairmarket.solver import Event, Trace, phase1_init, solve, SolverConfig
from fairmarket.verify import (
    EnumerationBudgetExceeded,
    audit_trace,
    brute_force_eps_pareto_dominator,
    brute_force_nash_opt,
    brute_force_pareto_dominator,
    check_delta_equivalence,
    check_eps_EF1,
    check_fpo_certificate,
    ef1_slack,
    nsw,
)

from conftest import allocations_for, epsilons, small_instances

C6_X = make_allocation([{0, 1}, {2, 3}])
C6_Y = make_allocation([{0, 1, 3}, {2}])


def all_allocations(n, m):
    for owners in itertools.product(range(n), repeat=m):
        bundles = [set() for _ in range(n)]
        for j, i in enumerate(owners):
            bundles[i].add(j)
        yield owners, make_allocation(bundles)


def product(inst, x):
    out = 1
    for i, b in enumerate(x):
        out *= sum(inst.valuations[i][j] for j in b)
    return out


def oracle_maximizers(inst):
    scored = [(product(inst, x), owners) for owners, x in all_allocations(inst.n, inst.m)]
    best = max(s for s, _ in scored)
    return best, [o for s, o in scored if s == best]


class TestEF1:
    def test_c6_y_witness(self):
        holds, w = check_eps_EF1(fixture("c6"), C6_Y, 0)
        assert not holds
        assert (w.envious, w.envied, w.removed_good, w.own_value, w.remaining_value) == (1, 0, 3, 1, 4)
        assert "agent 2 envies agent 1" in w.describe()

    def test_c4_shifted(self):
        x = make_allocation([{1}, {2}, {0}])
        assert check_eps_EF1(fixture("c4"), x, 0) == (True, None)

    def test_partial(self):
        assert check_eps_EF1(Instance([[1, 5], [3, 3]]), [{0}, set()], 0)[0]

    def test_slack(self):
        inst = Instance([[1, 1, 1, 1], [1, 1, 1, 1]])
        x = [{0}, {1, 2, 3}]
        assert not check_eps_EF1(inst, x, 0)[0]
        assert ef1_slack(inst, x) == 1
        assert check_eps_EF1(inst, x, 1)[0]
        assert not check_eps_EF1(inst, x, F(1, 2))[0]

    def test_slack_infinite(self):
        assert ef1_slack(Instance([[0, 1, 1], [1, 1, 1]]), [{0}, {1, 2}]) is None

    @given(small_instances(), st.data())
    def test_monotone(self, inst, data):
        x = data.draw(allocations_for(inst.n, inst.m, complete=False))
        small, big = sorted([F(data.draw(st.integers(0, 8)), 8), F(data.draw(st.integers(0, 8)), 8)])
        if check_eps_EF1(inst, x, small)[0]:
            assert check_eps_EF1(inst, x, big)[0]

    @given(small_instances(), st.data())
    def test_slack_is_tight(self, inst, data):
        x = data.draw(allocations_for(inst.n, inst.m, complete=False))
        f = ef1_slack(inst, x)
        if f is not None:
            assert check_eps_EF1(inst, x, f)[0]
            if f > 0:
                assert not check_eps_EF1(inst, x, f * F(999, 1000))[0]

    def test_delta_examples(self):
        assert check_delta_equivalence(fixture("c6"), C6_X)
        assert check_delta_equivalence(fixture("c6"), C6_Y)
        assert not check_eps_EF1(fixture("c6"), C6_Y, F(1, 16))[0]

    def test_delta_equivalence_random(self):
        rng = np.random.default_rng(2024)
        for _ in range(1000):
            n, m = int(rng.integers(1, 5)), int(rng.integers(1, 7))
            inst = generate("random", int(rng.integers(0, 10**6)), n=n, m=m, vmax=int(rng.integers(1, 12)))
            owners = rng.integers(-1, n, size=m)
            x = [{j for j in range(m) if owners[j] == i} for i in range(n)]
            assert check_delta_equivalence(inst, x)


class TestNsw:
    def test_zero(self):
        assert nsw(Instance([[1, 1], [1, 1]]), [{0, 1}, set()]).product == 0

    def test_c6(self):
        value = nsw(fixture("c6"), C6_X)
        assert value.product == 16 and value.approx == pytest.approx(4)

    def test_single(self):
        assert nsw(Instance([[3, 4]]), [{0, 1}]).product == 7

    def test_compare(self):
        inst = fixture("c6")
        assert nsw(inst, C6_Y) < nsw(inst, C6_X)


class TestOracles:
    def test_nash_2x2(self):
        x, v = brute_force_nash_opt(Instance([[2, 1], [1, 2]]))
        assert x == make_allocation([{0}, {1}]) and v.product == 4

    def test_nash_2x3(self):
        x, v = brute_force_nash_opt(Instance([[3, 1, 1], [1, 1, 3]]))
        assert v.product == 12 and x == make_allocation([{0, 1}, {2}])

    def test_nash_single(self):
        x, _ = brute_force_nash_opt(Instance([[1, 2, 3]]))
        assert x == make_allocation([{0, 1, 2}])

    def test_budget(self):
        with pytest.raises(EnumerationBudgetExceeded):
            brute_force_nash_opt(Instance([[1] * 10] * 3), budget=1000)

    def test_big_values_exact(self):
        inst = fixture("c3")
        x, v = brute_force_nash_opt(inst)
        best, _ = oracle_maximizers(inst)
        assert v.product == best

    @given(small_instances(max_n=3, max_m=5))
    def test_nash_matches_itertools(self, inst):
        x, v = brute_force_nash_opt(inst)
        best, owners = oracle_maximizers(inst)
        assert v.product == best
        first = make_allocation([{j for j, i in enumerate(owners[0]) if i == a} for a in range(inst.n)])
        assert x == first

    @given(small_instances(max_n=3, max_m=5))
    def test_nash_opt_is_ef1_and_po(self, inst):
        x, v = brute_force_nash_opt(inst)
        if v.product > 0:
            assert check_eps_EF1(inst, x, 0)[0]
            assert brute_force_pareto_dominator(inst, x) is None

    @given(small_instances(max_n=3, max_m=4), st.data())
    def test_row_scaling_keeps_maximizers(self, inst, data):
        i = data.draw(st.integers(0, inst.n - 1))
        k = data.draw(st.integers(2, 5))
        rows = [list(r) for r in inst.valuations]
        rows[i] = [k * v for v in rows[i]]
        best, before = oracle_maximizers(inst)
        best2, after = oracle_maximizers(Instance(rows))
        if best > 0:
            assert before == after

    def test_c6_y_dominated(self):
        y = brute_force_pareto_dominator(fixture("c6"), C6_Y)
        assert y is not None
        inst = fixture("c6")
        gains = [inst.value(i, y[i]) - inst.value(i, C6_Y[i]) for i in range(2)]
        assert min(gains) >= 0 and max(gains) > 0

    def test_single_agent_po(self):
        assert brute_force_pareto_dominator(Instance([[1, 2]]), [{0, 1}]) is None

    @given(small_instances(max_n=3, max_m=4), st.data())
    def test_dominator_matches_itertools(self, inst, data):
        x = data.draw(allocations_for(inst.n, inst.m, complete=False))
        mine = [inst.value(i, b) for i, b in enumerate(x)]
        expected = None
        for owners, y in all_allocations(inst.n, inst.m):
            theirs = [inst.value(i, b) for i, b in enumerate(y)]
            if all(a >= b for a, b in zip(theirs, mine)) and theirs != mine:
                expected = y
                break
        assert brute_force_pareto_dominator(inst, x) == expected

    def test_eps_po(self):
        inst = fixture("c6")
        # x gives (4, 4) vs y's (4, 1): y needs no slack, but a 1/2 margin rules x out
        assert brute_force_eps_pareto_dominator(inst, C6_Y, F(0)) is not None
        assert brute_force_eps_pareto_dominator(inst, C6_X, F(1, 2)) is None


class TestFpoCertificate:
    @given(small_instances(), epsilons)
    def test_phase1(self, inst, eps):
        r = round_instance(inst, eps)
        out = phase1_init(r)
        assert check_fpo_certificate(r, out.allocation, out.prices)

    def test_move_good_outside_mbb(self):
        r = round_instance(Instance([[4, 1], [1, 4]]), F(1, 4))
        out = phase1_init(r)
        assert not check_fpo_certificate(r, [{0, 1}, set()], out.prices)

    def test_unallocated(self):
        r = round_instance(Instance([[4, 1], [1, 4]]), F(1, 4))
        out = phase1_init(r)
        assert not check_fpo_certificate(r, [{0}, set()], out.prices)

    def test_shape(self):
        r = round_instance(Instance([[4, 1], [1, 4]]), F(1, 4))
        with pytest.raises(ValueError):
            check_fpo_certificate(r, [{0}, {1}], [1])

    @given(small_instances(max_n=3, max_m=4), epsilons)
    def test_certificate_implies_no_integral_dominator(self, inst, eps):
        r = round_instance(inst, eps)
        if len(hall_decomposition(inst)[0]) < inst.n:
            return
        sol = solve(inst, SolverConfig(epsilon=eps, mode="fixed"))
        assert check_fpo_certificate(r, sol.allocation, sol.prices)
        assert brute_force_pareto_dominator(r, sol.allocation) is None


def trace_of(events, eps=F(1, 4), final=(1, 1)):
    return Trace(eps, (1, 1), tuple(F(p) for p in final), list(events))


class TestAudit:
    rounded = round_instance(Instance([[1, 1], [1, 1]]), F(1, 4))

    def test_clean_c4(self):
        sol = solve(fixture("c4"), SolverConfig(trace_enabled=True))
        assert audit_trace(sol.trace, sol.market).ok

    def test_dip(self):
        t = trace_of([Event("swap", {}, F(2)), Event("swap", {}, F(1)), Event("terminate", {}, F(1))])
        report = audit_trace(t, self.rounded)
        assert [i for i, _ in report.violations] == [1]

    def test_alpha_below_one(self):
        t = trace_of([Event("price_rise", {"alpha": F(1, 2), "rule": "alpha2"}, F(1)), Event("terminate", {}, F(1))])
        assert not audit_trace(t, self.rounded).ok

    def test_alpha_not_power(self):
        t = trace_of([Event("price_rise", {"alpha": F(3, 2), "rule": "alpha1"}, F(1)), Event("terminate", {}, F(1))])
        assert audit_trace(t, self.rounded).violations[0][0] == 0

    def test_power_ok(self):
        t = trace_of([Event("price_rise", {"alpha": F(25, 16), "rule": "alpha3"}, F(1)), Event("terminate", {}, F(1))])
        assert audit_trace(t, self.rounded).ok

    def test_terminate_count(self):
        assert not audit_trace(trace_of([Event("swap", {}, F(1))]), self.rounded).ok
        t = trace_of([Event("terminate", {}, F(1)), Event("swap", {}, F(1))])
        assert not audit_trace(t, self.rounded).ok

    def test_price_cap(self):
        t = trace_of([Event("terminate", {}, F(1))], final=(5, 1))
        assert any("final price" in msg for _, msg in audit_trace(t, self.rounded).violations)
