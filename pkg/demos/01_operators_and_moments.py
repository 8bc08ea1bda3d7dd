"""Tour of the operator families: applying them pointwise, their central
moments, and the contraction profile alpha = 1 - L(psi)/psi.

Run:  python demos/01_operators_and_moments.py
"""

import numpy as np

from opgeom import (OperatorSpec, alpha_profile, default_grid, moment, psi,
                    registry)

x = np.array([0.1, 0.25, 0.5, 0.75, 0.9])
f = registry("sin_pi")

print("Applying the three families to sin(pi x) at a few points")
print("  x        :", np.array2string(x, precision=4))
for spec in (OperatorSpec("bernstein", 8),
             OperatorSpec("durrmeyer", 8, rho=1.0),
             OperatorSpec("mkz-symmetric", 8, truncation_eps=1e-10)):
    vals = np.asarray(spec.apply(f, x))
    print(f"  {spec.family:14s}:", np.array2string(vals, precision=4))
print("  target   :", np.array2string(f(x), precision=4))

print("\nSecond central moments M2(x) = L((t - x)^2)(x) at x = 0.3")
print("  family          measured        closed/known form")
b = OperatorSpec("bernstein", 8)
print(f"  bernstein       {moment(b, 2, 0.3):.8f}      psi(x)/n    = {psi(0.3)/8:.8f}")
d = OperatorSpec("durrmeyer", 8, rho=1.0)
print(f"  durrmeyer       {moment(d, 2, 0.3):.8f}      2 psi/(n+1) = {2*psi(0.3)/9:.8f}")
z = OperatorSpec("mkz-symmetric", 8, truncation_eps=1e-12)
print(f"  mkz-symmetric   {moment(z, 2, 0.3):.8f}      ~ psi/(2(n+1)) scale = {psi(0.3)/18:.8f}")

print("\nContraction profiles alpha(x) = M2(x)/psi(x) on the family grids")
grid = default_grid(257)
for spec in (b, d, z):
    prof = alpha_profile(spec, grid)
    kind = "constant" if prof.eta < 1e-10 else "varying "
    print(f"  {spec.family:14s} {kind}  nu = {prof.nu:.6f}  eta = {prof.eta:.6f}"
          f"  |L(psi)|_psi ~ {prof.b_norm:.6f}")
print("\nThe constant-profile families reproduce quadratics into quadratics;")
print("the symmetrized series family has a genuinely varying profile, but")
print("its oscillation ratio eta stays below 1/(n+1).")
