"""Limaçon domains: convexity, the Steklov threshold, and a positive ground state.

Writes boundary curves to limacon_boundaries/ for plotting.
"""
from pathlib import Path

from platelab.limacon import (LimaconDomain, is_convex, limacon_ground_state, steklov_threshold,
                              write_boundary_csv)
from platelab.shooting import SteklovParams
from platelab.spectral import SpectralBasis

out = Path("limacon_boundaries")
out.mkdir(exist_ok=True)
print(f"{'a':>5} {'convex':>7} {'min kappa':>10} {'nu*':>10}")
for a in (0.0, 0.1, 0.2, 0.25, 0.3, 0.35, 0.4):
    dom = LimaconDomain(a)
    conv = is_convex(dom)
    print(f"{a:5.2f} {str(conv.convex):>7} {conv.min_curvature:10.4f} "
          f"{steklov_threshold(dom).nu_star:10.4f}")
    write_boundary_csv(dom, out / f"a{a:.2f}.csv", 512)

# sigma = 1 lies above the threshold at a = 0.3, so the ground state is positive
dom = LimaconDomain(0.3)
gs = limacon_ground_state(dom, SteklovParams(3.0, 1.0), SpectralBasis(M=10, K=24))
print(f"a=0.3 sigma=1: converged {gs.converged}, min u / max |u| = {gs.min_value / gs.max_abs:.2e}")
