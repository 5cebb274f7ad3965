"""Shared random generators for the test-suite."""

import numpy as np

from berezin_kms.sphere_calculus import SphericalFunction
from berezin_kms.su2_special import lm_index, lm_pairs


def random_function(rng, band, real=False):
    n = (band + 1) ** 2
    c = rng.normal(size=n) + 1j * rng.normal(size=n)
    if real:
        for l, m in lm_pairs(band):
            if m == 0:
                c[lm_index(l, 0)] = c[lm_index(l, 0)].real
            elif m > 0:
                c[lm_index(l, -m)] = (-1) ** m * np.conj(c[lm_index(l, m)])
    return SphericalFunction(c)


def random_points(rng, n):
    return rng.uniform(0, np.pi, n), rng.uniform(0, 2 * np.pi, n)


def random_hermitian(rng, n):
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (A + A.conj().T) / 2


def random_observable(rng, region, band, real=False, density=1.0):
    """Random lattice observable on ``region`` with per-site band limit ``band``."""
    import itertools

    from berezin_kms.lattice import LatticeObservable

    per_site = [[(0, 0)] + [(l, m) for l, m in lm_pairs(band) if l > 0] for _ in region]
    coeffs = {}
    for combo in itertools.product(*per_site):
        if rng.random() > density:
            continue
        key = tuple((s, l, m) for s, (l, m) in zip(region, combo))
        coeffs[key] = complex(rng.normal(), rng.normal()) / (1 + sum(l for l, _ in combo))
    a = LatticeObservable(region, coeffs)
    if real:
        a = (a + a.conj()) * 0.5
    return a


def random_points_region(rng, region, n):
    return {s: random_points(rng, n) for s in region}
