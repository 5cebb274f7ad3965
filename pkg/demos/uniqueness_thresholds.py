"""Critical inverse temperatures and the Kirkwood-Salzburg fixed point.

Computes K_2 with its certified bracket and the thresholds beta_{0,s} and
beta_{eps,s} for the single-site field, then solves the truncated KS equations
below threshold and compares with the Gibbs moments.
"""

from berezin_kms import (
    ClassicalGibbs,
    QuantumGibbs,
    Region,
    SphericalFunction,
    Truncation,
    beta_classical,
    beta_quantum,
    ks_solve_classical,
    ks_solve_quantum,
)
from berezin_kms.lattice import single_site_potential
from berezin_kms.uniqueness import k_s_bounds, potential_norm

phi = single_site_potential(0.5 * SphericalFunction.harmonic(1, 0))
R = Region.path(1)

kv = k_s_bounds(2)
print(f"K_2 in [{kv.lower:.11f}, {kv.upper:.11f}]")
print("||phi||_{0,2} =", potential_norm(phi, 0.0, 2))
b0, be = beta_classical(phi), beta_quantum(phi, 1.0)
print(f"beta_0 = {b0:.6g}, beta_eps = {be:.6g} (eps = 1)")

rep = ks_solve_classical(phi, b0 / 2, Truncation(R, 6, 5, 24))
gib = ClassicalGibbs(phi, R, b0 / 2, 48).moments(6)
print("classical KS:", rep.iterations, "iterations; distance to Gibbs", rep.moments.distance(gib, rep.moments.keys()))

for j in (1, 2):
    t = Truncation(R, 2 * j, 5, 24)
    rep = ks_solve_quantum(j, phi, be / 2, t)
    g = QuantumGibbs(j, phi, R, be / 2)
    print(f"quantum KS j={j}:", rep.iterations, "iterations; distance", rep.moments.distance(g.moments(t.lmax), rep.moments.keys()))

# Well above threshold the truncated operator may still contract, but no
# guarantee applies; the report carries a warning.
rep = ks_solve_classical(phi, 0.5, Truncation(R, 6, 8, 28))
print("beta = 0.5:", rep.converged, rep.warning)
