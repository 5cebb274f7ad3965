"""Berezin quantization of a single spin.

Walks through coherent states, the quantization map Q_j, the check function
and the commutator/bracket correspondence for growing spin j.
"""

import numpy as np

from berezin_kms import (
    SphericalFunction,
    c_coeff,
    check_function,
    coherent_state,
    context,
    dgr_defect,
    quantize,
    quantize_by_quadrature,
)
from berezin_kms.semiclassics import cartesian

Y = SphericalFunction.harmonic

# Coherent states point along sigma: <J> = j * (unit vector).
ctx = context(2)
theta, phi = 1.1, 0.4
v = coherent_state(ctx, theta, phi)
print("<J3> in the coherent state:", np.vdot(v, ctx.J3 @ v).real, "expected", 2 * np.cos(theta))

# Q_j in closed form agrees with the integral of coherent-state projectors.
f = Y(2, 1) + 0.3 * Y(1, 0)
print("closed form vs quadrature:", np.max(np.abs(quantize(ctx, f) - quantize_by_quadrature(ctx, f))))

# Q_j(cos theta) = J3 / (j + 1); harmonics above 2j are annihilated.
print("Q(Y10) - J3/(j+1):", np.max(np.abs(quantize(ctx, Y(1, 0)) - ctx.J3 / 3)))
print("Q(Y_{5,0}) at j=2:", np.max(np.abs(quantize(ctx, Y(5, 0)))))

# The check function shrinks each harmonic by c_{j,l}, which tends to 1.
for j in (1, 4, 16):
    c = context(j)
    chk = check_function(c, quantize(c, Y(2, 0)))
    print(f"j={j:3d}  c_(j,2) = {c_coeff(c, 2):.4f}  check coefficient = {chk[2, 0].real:.4f}")

# Commutators approach Poisson brackets: the defect for x1, x2 is j/(j+1)^2.
x1, x2, _ = cartesian()
for j in (0.5, 2, 8, 32):
    print(f"j={j:5}  DGR defect = {dgr_defect(j, x1, x2):.6f}  j/(j+1)^2 = {j / (j + 1) ** 2:.6f}")
