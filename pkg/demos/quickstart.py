"""Solve a small instance and look at what comes back."""

from fractions import Fraction

from fairmarket import Instance, SolverConfig, check_eps_EF1, solve

# three agents, five goods; row i is agent i's value for each good
inst = Instance([
    [8, 1, 4, 0, 2],
    [3, 7, 4, 5, 1],
    [6, 6, 1, 2, 9],
], name="quickstart")

sol = solve(inst)  # adaptive: eps starts at 1/4 and halves until EF1 holds

for i, bundle in enumerate(sol.allocation):
    goods = sorted(j + 1 for j in bundle)
    print(f"agent {i + 1}: goods {goods}, value {inst.value(i, bundle)}")

print("eps tried:", [str(e) for e in sol.attempts])
print("prices on the rounded instance:", [str(p) for p in sol.prices])
print("certificates:", sol.certificates)
print("Nash product:", sol.nsw.product, "geometric mean ~", round(sol.nsw.approx, 3))

# the checkers are independent of the solver, so they can be pointed at anything
print("EF1?", check_eps_EF1(inst, sol.allocation)[0])
print("EF1 for a greedy split?", check_eps_EF1(inst, [{0, 1, 2}, {3}, {4}]))

# fixed mode keeps one eps; the allocation is then only guaranteed 3*eps-EF1
coarse = solve(inst, SolverConfig(epsilon=Fraction(1, 2), mode="fixed"))
print("eps = 1/2 slack on the rounded instance:", coarse.certificates.eps_ef1_rounded)
