"""Energy descent on the disc from a lopsided start ends at a radial positive state.

Also compares the spectral ground state with the shooting profile along a ray.
"""
import numpy as np

from platelab.shooting import SteklovParams, solve_radial
from platelab.spectral import DescentOptions, SpectralBasis, evaluate, ground_state

params = SteklovParams(3.0, 2.0)
basis = SpectralBasis(M=12, K=40)
gs = ground_state(params, basis, DescentOptions(init="asymmetric", seed=1))
print(f"iterations {gs.iterations}, energy {gs.energy:.10f}")
print(f"radial fraction {gs.radial_fraction:.12f}, min u {gs.min_value:.3e}")

ref = solve_radial(params).profile
for theta in (0.0, 2.0):
    u = evaluate(gs.field, ref.r, np.full_like(ref.r, theta))
    print(f"theta={theta}: max |u - u_shoot| = {np.max(np.abs(u - ref.u)):.2e}")
