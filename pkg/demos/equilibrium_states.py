"""Gibbs states as KMS states, quantum and classical.

Builds a two-site chain (a 0.25 x.x' bond plus a 0.5 Y10 field), checks the
KMS conditions and the auto-correlation inequality, and watches the quantum
Gibbs expectation approach its classical counterpart as j grows.
"""

import numpy as np

from berezin_kms import (
    ClassicalGibbs,
    LatticeObservable,
    QuantumGibbs,
    Region,
    autocorr_gap_classical,
    autocorr_gap_quantum,
    gibbs_limit_gap,
    kms_residual_classical,
    kms_residual_quantum,
)
from berezin_kms.config import load_config
from pathlib import Path

cfg = load_config(Path(__file__).resolve().parent.parent / "configs" / "two_site.toml")
phi, region = cfg.potential, cfg.region()
rng = np.random.default_rng(0)

# Quantum: omega(A tau_{i beta}(B)) = omega(B A) holds to roundoff.
g = QuantumGibbs(1, phi, region, beta=1.0)
A = rng.normal(size=(9, 9)) + 1j * rng.normal(size=(9, 9))
B = rng.normal(size=(9, 9)) + 1j * rng.normal(size=(9, 9))
print("quantum KMS residual:", kms_residual_quantum(g, A, B))
print("auto-correlation gap (>= 0):", autocorr_gap_quantum(g, A))

# Classical: omega({a, b}) = beta omega(b delta(a)) under product quadrature.
omega = ClassicalGibbs(phi, region, 1.0, degree=24)
a = LatticeObservable.monomial(region, [((0,), 1, 1), ((1,), 1, 0)])
b = LatticeObservable.monomial(region, [((1,), 1, -1)])
print("classical KMS residual:", kms_residual_classical(omega, a, b))
print("classical auto-correlation gap (= 0):", autocorr_gap_classical(omega, a))

# Semiclassical limit of single-site Gibbs states.
single = load_config(Path(__file__).resolve().parent.parent / "configs" / "single_site.toml")
obs = single.observables["a"]
for j in range(1, 7):
    print(f"j={j}  |omega_j(Q a) - omega(a)| = {gibbs_limit_gap(j, single.potential, Region.path(1), 1.0, obs):.5f}")
