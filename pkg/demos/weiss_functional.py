"""Weiss-type functional on the Stokes corner and on a translated copy.

M(r) is constant on the 3/2-homogeneous corner; on the translate the vertex
sits off-centre, M grows with r, and its derivative matches the boundary
formula for variational solutions.
"""
import numpy as np

from internal_bores import oracles
from internal_bores.diagnostics import geometric_radii, weiss_M

ub = oracles.stokes_corner()
r = geometric_radii(0.9, 13)

for name, f in (("corner", ub), ("corner shifted by 0.1", oracles.shifted(ub, 0.1))):
    tr = weiss_M(f, r)
    print(f"\n{name}")
    print(f"{'r':>10} {'M(r)':>18} {'dM/dr (fd)':>14} {'dM/dr (formula)':>16}")
    for rr, v, d, i in zip(tr.radii, tr.values, tr.derivative_estimates, tr.identity):
        print(f"{rr:10.5f} {v:18.15f} {d:14.6e} {i:16.6e}")

print(f"\n1/sqrt(3) = {1 / np.sqrt(3):.15f}")
