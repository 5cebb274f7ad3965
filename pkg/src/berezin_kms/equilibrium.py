"""Gibbs states on finite regions and KMS diagnostics.

Quantum dynamics: delta_j(A) = i[H, A], tau_t(A) = exp(itH) A exp(-itH), so the
imaginary-time map is tau_{i beta}(B) = exp(-beta H) B exp(beta H), and the
Gibbs state exp(-beta H)/Z satisfies omega(A tau_{i beta}(B)) = omega(B A).

Classical dynamics: delta(a) = {a, h}; the Gibbs measure exp(-beta h) d mu0 / Z
satisfies omega({a, b}) = beta omega(b delta(a)).
"""

from __future__ import annotations

from dataclasses import dataclass, field
import itertools
import math

import numpy as np

from .berezin import context
from .lattice import (
    GuardError,
    LatticeObservable,
    PotentialFamily,
    Region,
    hamiltonian_classical,
    hamiltonian_quantum,
    hs_basis_region,
    normal_key,
    poisson_bracket_region,
    product_region,
    rotate_site,
)
from .sphere_calculus import quad_rule
from .su2_special import lm_index, lm_pairs, sph_harm_table

MAX_QUAD_POINTS = 6_000_000
MAX_CLASSICAL_SITES = 3


class MomentVector:
    """Map from (region, l-multi-index, m-multi-index) to complex.

    Keys are normal keys ``((site, l, m), ...)``; the empty key is the empty
    region and carries omega(1).
    """

    def __init__(self, entries: dict | None = None):
        self.entries = {}
        for k, v in (entries or {}).items():
            self.entries[normal_key(k)] = complex(v)
        self.flag = None

    def __getitem__(self, key):
        return self.entries.get(normal_key(key), 0j)

    def __setitem__(self, key, value):
        self.entries[normal_key(key)] = complex(value)

    def __len__(self):
        return len(self.entries)

    def keys(self):
        return sorted(self.entries)

    def sup_norm(self) -> float:
        return max((abs(v) for v in self.entries.values()), default=0.0)

    def distance(self, other: "MomentVector", keys=None) -> float:
        keys = set(self.entries) | set(other.entries) if keys is None else keys
        return max((abs(self[k] - other[k]) for k in keys), default=0.0)

    def rows(self):
        """(region, l-multi-index, m-multi-index, re, im) in key order."""
        out = []
        for k in self.keys():
            v = self.entries[k]
            region = ";".join(",".join(str(c) for c in s) for s, _, _ in k)
            ls = ";".join(str(l) for _, l, _ in k)
            ms = ";".join(str(m) for _, _, m in k)
            out.append((region, ls, ms, v.real, v.imag))
        return out


def moment_keys(region: Region, lmax: int, include_empty: bool = True):
    """All keys on subregions of ``region`` with every l in [1, lmax]."""
    keys = [()] if include_empty else []
    per = [(l, m) for l, m in lm_pairs(lmax) if l > 0]
    sites = region.sites
    for r in range(1, len(sites) + 1):
        for sub in itertools.combinations(sites, r):
            for combo in itertools.product(per, repeat=r):
                keys.append(tuple((s, l, m) for s, (l, m) in zip(sub, combo)))
    return keys


# ---------------------------------------------------------------------------
# Classical


class ProductGrid:
    """Tensor product of the sphere rule of a given degree over the sites."""

    def __init__(self, region: Region, degree: int):
        if len(region) > MAX_CLASSICAL_SITES:
            raise GuardError(
                f"tensor quadrature limited to {MAX_CLASSICAL_SITES} sites; use metropolis_moments"
            )
        self.region = region
        self.q = quad_rule(degree)
        self.n = len(self.q.weights)
        if self.n ** len(region) > MAX_QUAD_POINTS:
            raise GuardError(f"product grid with {self.n ** len(region)} points exceeds guard")
        self._tables = {}

    def table(self, lmax: int):
        if lmax not in self._tables:
            self._tables[lmax] = sph_harm_table(lmax, self.q.theta, self.q.phi)
        return self._tables[lmax]

    @property
    def shape(self):
        return (self.n,) * len(self.region)

    def weights(self):
        w = np.ones(())
        for _ in self.region:
            w = np.multiply.outer(w, self.q.weights)
        return w

    def values(self, a: LatticeObservable) -> np.ndarray:
        """Values of ``a`` on the grid, grouped by the part of the key on each site."""
        pos = {s: i for i, s in enumerate(self.region)}
        Y = self.table(max(a.band_limit(), 0))
        out = np.zeros(self.shape, dtype=complex)
        for k, v in a.coeffs.items():
            term = np.array(v, dtype=complex)
            for s, l, m in k:
                if s not in pos:
                    raise ValueError(f"site {s} outside quadrature region")
                idx = [None] * len(self.region)
                idx[pos[s]] = slice(None)
                term = term * Y[lm_index(l, m)][tuple(idx)]
            out = out + term
        return out


class ClassicalGibbs:
    """Gibbs measure exp(-beta h_Lambda) d mu0^Lambda / Z by product quadrature."""

    def __init__(self, phi: PotentialFamily, region: Region, beta: float, degree: int = 32):
        if beta < 0:
            raise ValueError("beta must be non-negative")
        self.phi = phi
        self.region = region
        self.beta = float(beta)
        self.degree = degree
        self.grid = ProductGrid(region, degree)
        self.h = hamiltonian_classical(phi, region)
        hv = self.grid.values(self.h).real
        e = -self.beta * (hv - hv.min())
        w = self.grid.weights() * np.exp(e)
        self.Z = float(w.sum() * math.exp(-self.beta * hv.min()))
        self._rho = w / w.sum()

    def expect(self, a: LatticeObservable) -> complex:
        return complex(np.sum(self._rho * self.grid.values(a)))

    def expect_values(self, vals: np.ndarray) -> complex:
        return complex(np.sum(self._rho * vals))

    def moments(self, lmax: int) -> MomentVector:
        """omega(Y_key) for all keys with l in [1, lmax] on all subregions."""
        Y = self.grid.table(lmax)
        t = self._rho.astype(complex)
        for _ in self.region:
            # contract the leading grid axis, append a harmonic axis
            t = np.tensordot(t, Y, axes=([0], [1]))
        pairs = lm_pairs(lmax)
        mv = MomentVector()
        for idx in itertools.product(range(len(pairs)), repeat=len(self.region)):
            key = normal_key([(s, *pairs[i]) for s, i in zip(self.region, idx)])
            if key not in mv.entries:
                mv.entries[key] = complex(t[idx])
        mv.entries[()] = 1.0 + 0j
        return mv


def gibbs_classical_moments(phi, region, beta, lmax, degree=32, check: bool = False, tol: float = 1e-10):
    """Classical Gibbs moments; with ``check`` the degree-doubling error is recorded
    in ``flag`` (True when some moment moved by more than ``tol``)."""
    mv = ClassicalGibbs(phi, region, beta, degree).moments(lmax)
    if check:
        mv2 = ClassicalGibbs(phi, region, beta, 2 * degree).moments(lmax)
        err = mv.distance(mv2)
        mv.flag = err > tol
        mv.error_estimate = err
    return mv


def metropolis_moments(phi, region, beta, keys, n_steps=20000, seed=0, step=0.5):
    """Seeded Metropolis estimate of Gibbs moments (smoke tests only)."""
    rng = np.random.default_rng(seed)
    h = hamiltonian_classical(phi, region)
    n = len(region)
    vec = rng.normal(size=(n, 3))
    vec /= np.linalg.norm(vec, axis=1, keepdims=True)

    def to_points(v):
        th = np.arccos(np.clip(v[:, 2], -1, 1))
        ph = np.arctan2(v[:, 1], v[:, 0])
        return {s: (th[i], ph[i]) for i, s in enumerate(region)}

    def energy(v):
        return float(np.real(h.evaluate(to_points(v))))

    obs = [LatticeObservable(region, {k: 1.0}) for k in keys]
    E = energy(vec)
    acc = np.zeros(len(keys), dtype=complex)
    for _ in range(n_steps):
        i = rng.integers(n)
        new = vec.copy()
        new[i] += step * rng.normal(size=3)
        new[i] /= np.linalg.norm(new[i])
        E2 = energy(new)
        if E2 <= E or rng.random() < math.exp(-beta * (E2 - E)):
            vec, E = new, E2
        pts = to_points(vec)
        acc += np.array([o.evaluate(pts) for o in obs])
    return MomentVector(dict(zip(keys, acc / n_steps)))


def kms_residual_classical(omega: ClassicalGibbs, a: LatticeObservable, b: LatticeObservable) -> float:
    """|omega({a, b}) - beta omega(b {a, h_Lambda})| under the same quadrature."""
    lhs = omega.expect(poisson_bracket_region(a, b))
    da = poisson_bracket_region(a, omega.h)
    rhs = omega.beta * omega.expect(product_region(b, da))
    return abs(lhs - rhs)


def autocorr_gap_classical(omega: ClassicalGibbs, a: LatticeObservable) -> float:
    """-i beta omega(a* delta(a)) - (-i omega({a, a*})); zero for Gibbs."""
    ac = a.conj()
    lhs = -1j * omega.beta * omega.expect(product_region(ac, poisson_bracket_region(a, omega.h)))
    rhs = -1j * omega.expect(poisson_bracket_region(a, ac))
    return float((lhs - rhs).real)


def rotation_identity_residual(phi, region, beta, x, euler, a: LatticeObservable, degree: int = 40) -> float:
    """|omega(a) - omega(exp(beta sum_{X ∋ x} (1 - R_x) phi_X) R_x a)|."""
    omega = ClassicalGibbs(phi, region, beta, degree)
    g = LatticeObservable(region, {})
    for X, obs in phi.translates_within(region):
        if x in X:
            o = LatticeObservable(region, obs.coeffs)
            g = g + o - rotate_site(o, x, euler)
    ra = rotate_site(LatticeObservable(region, a.coeffs), x, euler)
    vals = np.exp(beta * omega.grid.values(g)) * omega.grid.values(ra)
    return abs(omega.expect(a) - omega.expect_values(vals))


# ---------------------------------------------------------------------------
# Quantum


class QuantumGibbs:
    """rho = exp(-beta H)/tr exp(-beta H) via the eigendecomposition of H."""

    def __init__(self, j, phi: PotentialFamily | None, region: Region, beta: float, H: np.ndarray | None = None):
        self.ctx = context(j)
        self.region = region
        self.beta = float(beta)
        self.H = hamiltonian_quantum(self.ctx, phi, region) if H is None else H
        self.H = (self.H + self.H.conj().T) / 2
        self.energies, self.vectors = np.linalg.eigh(self.H)
        e = -self.beta * (self.energies - self.energies.min())
        p = np.exp(e)
        self.populations = p / p.sum()
        self.rho = (self.vectors * self.populations) @ self.vectors.conj().T

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    def expect(self, A: np.ndarray) -> complex:
        return complex(np.sum(self.rho.T * A))

    def moment(self, key) -> complex:
        """omega(Y_{j|key}) with the normalized tensor HS basis."""
        return self.expect(hs_basis_region(self.ctx, normal_key(key), self.region))

    def moments(self, lmax: int) -> MomentVector:
        L = min(lmax, self.ctx.two_j)
        return MomentVector({k: self.moment(k) for k in moment_keys(self.region, L)})

    def derivation(self, A: np.ndarray) -> np.ndarray:
        return 1j * (self.H @ A - A @ self.H)


def gibbs_quantum_state(j, phi, region, beta) -> QuantumGibbs:
    return QuantumGibbs(j, phi, region, beta)


def evolve_imaginary(j, H: np.ndarray, B: np.ndarray, beta: float) -> np.ndarray:
    """tau_{i beta}(B) = exp(-beta H) B exp(beta H) by eigen-conjugation."""
    E, V = np.linalg.eigh((H + H.conj().T) / 2)
    Bt = V.conj().T @ B @ V
    f = np.exp(-beta * (E[:, None] - E[None, :]))
    return V @ (f * Bt) @ V.conj().T


def kms_residual_quantum(rho: QuantumGibbs, A: np.ndarray, B: np.ndarray) -> float:
    """|omega(A tau_{i beta}(B)) - omega(B A)|."""
    tB = evolve_imaginary(rho.ctx, rho.H, B, rho.beta)
    return abs(rho.expect(A @ tB) - rho.expect(B @ A))


def autocorr_gap_quantum(rho: QuantumGibbs, a: np.ndarray, derivation=None) -> float:
    """-i beta omega(a* delta(a)) - u log(u/v), u = omega(a* a), v = omega(a a*).

    Conventions: u log(u/0) = +inf for u > 0 (the gap is then -inf), and
    0 log(0/v) = 0.
    """
    delta = rho.derivation if derivation is None else derivation
    ad = a.conj().T
    lhs = float((-1j * rho.beta * rho.expect(ad @ delta(a))).real)
    u = max(float(rho.expect(ad @ a).real), 0.0)
    v = max(float(rho.expect(a @ ad).real), 0.0)
    if u == 0.0:
        return lhs
    if v == 0.0:
        return -math.inf
    return lhs - u * math.log(u / v)
