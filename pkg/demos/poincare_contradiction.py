"""Why a cone lower bound is incompatible with the corner's energy decay.

If a blowup were bounded below by C |z|^mu cos(mu(theta - pi/2)) on a cone
of aperture pi/mu with mu = 5/4, a Poincare-type inequality would force
r^-2 int_{B_r} |grad u|^2 to decay no faster than r^{2 mu - 2} = r^{1/2}.
The Stokes corner's energy density decays like r^1, so the two curves cross
and the lower bound cannot hold at small r.
"""
import numpy as np

from internal_bores import oracles
from internal_bores.diagnostics import geometric_radii, oddson_check, poincare_exponents

mu = 1.25
C = oddson_check(oracles.cone_harmonic(mu), mu, 1.0)
out = poincare_exponents(oracles.stokes_corner(), mu, C, geometric_radii(1.0, 28))

print(f"Oddson constant of the cone harmonic: C = {C:.6f}")
print(f"{'r':>10} {'energy':>14} {'cone bound':>14}")
for r, e, b in zip(out["radii"][::3], out["energy"][::3], out["bound"][::3]):
    print(f"{r:10.5f} {e:14.6e} {b:14.6e}")
print(f"energy exponent {out['energy_exponent']:.4f}, bound exponent {out['bound_exponent']:.4f}")
ratio = out["bound"] / out["energy"]
print(f"bound/energy grows from {ratio[0]:.3g} to {ratio[-1]:.3g} as r shrinks")
