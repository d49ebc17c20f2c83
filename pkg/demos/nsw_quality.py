"""How close does the market allocation get to the Nash-optimal one?

Brute force is only feasible for tiny instances, which is exactly where the
comparison is interesting.
"""

import numpy as np

from fairmarket import brute_force_nash_opt, generate, solve

ratios = []
for seed in range(200):
    inst = generate("random", seed, n=3, m=6, vmax=10)
    sol = solve(inst)
    _, opt = brute_force_nash_opt(inst)
    if opt.product == 0:
        continue
    # ratio of geometric means
    ratios.append((sol.nsw.product / opt.product) ** (1 / inst.n))

ratios = np.array(ratios)
print(f"{ratios.size} instances with positive optimum")
print(f"mean ratio {ratios.mean():.4f}, worst {ratios.min():.4f}")
print(f"share exactly optimal: {np.mean(np.isclose(ratios, 1.0)):.2%}")
print("worst-case guarantee: 1/1.45 =", round(1 / 1.45, 4))
hist, edges = np.histogram(ratios, bins=[0.6, 0.7, 0.8, 0.9, 0.95, 0.999, 1.001])
for count, lo, hi in zip(hist, edges, edges[1:]):
    print(f"  [{lo:.3f}, {hi:.3f}) {count}")
