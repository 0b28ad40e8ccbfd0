"""Radial positive solutions on the unit disc across the boundary parameter.

Solves the radial problem by shooting for p = 3 and a range of sigma, then prints
the central value, the gradient at the rim, and whether the profile is monotone.
"""
import numpy as np

from platelab.radial import check_monotonicity
from platelab.shooting import SteklovParams, solve_radial

print(f"{'sigma':>8} {'u(0)':>12} {'u_r(1)':>12} {'lambda':>12} monotone")
for sigma in (-0.9, -0.5, 0.0, 1.0, 2.0, 10.0, 100.0):
    res = solve_radial(SteklovParams(3.0, sigma))
    pr = res.profile
    mono = check_monotonicity(pr)
    print(f"{sigma:8.1f} {pr.u[0]:12.6f} {pr.du[-1]:12.6f} {res.lam:12.6f} "
          f"{mono.u_strictly_decreasing and mono.lap_strictly_increasing}")

# large sigma approaches the clamped plate: the rim slope shrinks like 1/sigma
slopes = [solve_radial(SteklovParams(3.0, s)).profile.du[-1] for s in (10.0, 100.0, 1000.0)]
print("rim slope ratios:", np.round(np.array(slopes[:-1]) / np.array(slopes[1:]), 2))
