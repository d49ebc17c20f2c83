"""Watch the price/swap dynamics on the 5-agent, 7-good fixture.

At eps = 1/64 the welfare-maximizing start is far from balanced, so the run
goes through swaps along the least spender's hierarchy and a few price rises.
"""

from fractions import Fraction

from fairmarket import SolverConfig, fixture, round_instance, solve_rounded
from fairmarket.market import build_hierarchy, least_spender
from fairmarket.solver import phase1_init

inst = fixture("c5")
eps = Fraction(1, 64)
rounded = round_instance(inst, eps)

start = phase1_init(rounded)
print("start bundles:", [sorted(j + 1 for j in b) for b in start.allocation])
print("start spendings:", [float(s) for s in start.spendings])

root = least_spender(start)
hier = build_hierarchy(root, start)
print(f"least spender: agent {root + 1}; hierarchy levels:",
      [[a + 1 for a in level] for level in hier.levels])

outcome, trace = solve_rounded(rounded, eps, SolverConfig(epsilon=eps, trace_enabled=True))
for t, ev in enumerate(trace.events):
    d = ev.data
    if ev.kind == "swap":
        what = f"good {d['good'] + 1}: agent {d['source'] + 1} -> agent {d['target'] + 1} (level {d['level']})"
    elif ev.kind == "price_rise":
        what = f"x{float(d['alpha']):.4f} by {d['rule']} on goods {[j + 1 for j in d['goods']]}"
    elif ev.kind == "identity_change":
        what = f"least spender {d['old'] + 1} -> {d['new'] + 1}"
    else:
        what = d["reason"]
    print(f"{t:2d} {ev.kind:15s} {what:55s} min spend {float(ev.least_spender_spending):.4f}")

print("final bundles:", [sorted(j + 1 for j in b) for b in outcome.allocation])
print("final spendings:", [round(float(s), 4) for s in outcome.spendings])
