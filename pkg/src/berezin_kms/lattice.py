"""Finite regions of Z^d, lattice observables and potentials.

A lattice observable is a sparse table of Fourier-Laplace coefficients.  Keys
are tuples ``((site, l, m), ...)`` sorted by site and contain only sites with
``l >= 1``; the empty key is the constant function.  Dropping ``l = 0`` sites
means an observable never depends on the region it is embedded in.

Quantum counterparts are dense matrices on the tensor product of the site
spaces, with sites in lexicographic order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
import itertools
import math

import numpy as np

from .berezin import c_coeff, context, hs_product_coeffs
from .sphere_calculus import (
    SphericalFunction,
    derivative_tables,
    poisson_bracket,
    product_table,
    sup_grid,
)
from .su2_special import lm_index, lm_pairs, sph_harm_table

MAX_DENSE_DIM = 4096


class GuardError(RuntimeError):
    """Raised when a dense dimension or quadrature guard is exceeded."""


def _site(s) -> tuple:
    if isinstance(s, (int, np.integer)):
        return (int(s),)
    return tuple(int(v) for v in s)


class Region:
    """Finite set of lattice sites in lexicographic order."""

    __slots__ = ("sites", "d")

    def __init__(self, sites=(), d: int | None = None):
        s = sorted({_site(x) for x in sites})
        if s and len({len(x) for x in s}) != 1:
            raise ValueError("sites of mixed dimension")
        self.sites = tuple(s)
        self.d = len(s[0]) if s else (1 if d is None else d)

    @classmethod
    def path(cls, n: int, start: int = 0) -> "Region":
        return cls([(start + i,) for i in range(n)])

    def __iter__(self):
        return iter(self.sites)

    def __len__(self):
        return len(self.sites)

    def __contains__(self, s):
        return _site(s) in self.sites

    def __eq__(self, other):
        return isinstance(other, Region) and self.sites == other.sites

    def __hash__(self):
        return hash(self.sites)

    def __repr__(self):
        return f"Region({list(self.sites)})"

    def __or__(self, other: "Region") -> "Region":
        return Region(self.sites + other.sites)

    def __and__(self, other: "Region") -> "Region":
        return Region([s for s in self.sites if s in other.sites], d=self.d)

    def issubset(self, other: "Region") -> bool:
        return all(s in other.sites for s in self.sites)

    def translate(self, t) -> "Region":
        t = _site(t)
        return Region([tuple(a + b for a, b in zip(s, t)) for s in self.sites])

    @property
    def min(self):
        return self.sites[0]

    def index(self, s) -> int:
        return self.sites.index(_site(s))

    def canonical(self):
        """Translate so that the lexicographic minimum sits at the origin."""
        if not self.sites:
            return self, ()
        t = tuple(-v for v in self.sites[0])
        return self.translate(t), t


def _shift_key(key, t):
    return tuple((tuple(a + b for a, b in zip(s, t)), l, m) for s, l, m in key)


def key_sites(key) -> tuple:
    return tuple(s for s, _, _ in key)


class LatticeObservable:
    """Sparse coefficient table of a function on (S^2)^region."""

    def __init__(self, region: Region, coeffs: dict | None = None):
        self.region = region if isinstance(region, Region) else Region(region)
        self.coeffs = {}
        for k, v in (coeffs or {}).items():
            nk = normal_key(k)
            for s, _, _ in nk:
                if s not in self.region.sites:
                    raise ValueError(f"site {s} outside region {self.region}")
            self.coeffs[nk] = self.coeffs.get(nk, 0j) + complex(v)

    # -- constructors -----------------------------------------------------
    @classmethod
    def constant(cls, region, value=1.0):
        return cls(region, {(): value})

    @classmethod
    def monomial(cls, region, factors, value=1.0):
        """``value * prod Y_{l m}(sigma_site)`` for ``factors = [(site, l, m), ...]``."""
        return cls(region, {tuple((_site(s), l, m) for s, l, m in factors): value})

    @classmethod
    def from_single(cls, site, f: SphericalFunction, region=None):
        s = _site(site)
        region = Region([s]) if region is None else region
        return cls(region, {((s, l, m),): v for (l, m), v in f.to_dict().items()})

    # -- algebra ----------------------------------------------------------
    def copy(self):
        return LatticeObservable(self.region, dict(self.coeffs))

    def _merged_region(self, other):
        return self.region if self.region == other.region else self.region | other.region

    def __add__(self, other):
        if not isinstance(other, LatticeObservable):
            other = LatticeObservable.constant(self.region, other)
        out = LatticeObservable(self._merged_region(other), self.coeffs)
        for k, v in other.coeffs.items():
            out.coeffs[k] = out.coeffs.get(k, 0j) + v
        return out

    __radd__ = __add__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, other):
        if isinstance(other, LatticeObservable):
            return product_region(self, other)
        return LatticeObservable(self.region, {k: v * other for k, v in self.coeffs.items()})

    def __rmul__(self, s):
        return self * s

    def conj(self):
        out = {}
        for k, v in self.coeffs.items():
            sign = (-1) ** sum(m for _, _, m in k)
            nk = tuple((s, l, -m) for s, l, m in k)
            out[nk] = out.get(nk, 0j) + sign * np.conj(v)
        return LatticeObservable(self.region, out)

    def is_self_adjoint(self, tol: float = 1e-12) -> bool:
        return (self - self.conj()).max_abs() <= tol

    def max_abs(self) -> float:
        return max((abs(v) for v in self.coeffs.values()), default=0.0)

    def cleaned(self, tol: float = 1e-14) -> "LatticeObservable":
        return LatticeObservable(self.region, {k: v for k, v in self.coeffs.items() if abs(v) > tol})

    def support(self) -> Region:
        return Region([s for k in self.coeffs for s in key_sites(k)], d=self.region.d)

    def band_limit(self) -> int:
        return max((l for k in self.coeffs for _, l, _ in k), default=0)

    def site_band_limit(self, site) -> int:
        s = _site(site)
        return max((l for k in self.coeffs for t, l, _ in k if t == s), default=0)

    def translate(self, t) -> "LatticeObservable":
        t = _site(t)
        return LatticeObservable(
            self.region.translate(t), {_shift_key(k, t): v for k, v in self.coeffs.items()}
        )

    def __getitem__(self, key):
        return self.coeffs.get(normal_key(key), 0j)

    def evaluate(self, points: dict):
        """Values at ``points = {site: (theta, phi)}`` (arrays broadcast)."""
        lmax = self.band_limit()
        tables = {}
        for s in self.region:
            th, ph = points[s]
            tables[s] = sph_harm_table(lmax, th, ph)

        total = 0
        for k, v in self.coeffs.items():
            term = v
            for s, l, m in k:
                term = term * tables[s][lm_index(l, m)]
            total = total + term
        return total

    def __repr__(self):
        return f"LatticeObservable({self.region}, nnz={len(self.coeffs)})"


def normal_key(key) -> tuple:
    items = [(_site(s), int(l), int(m)) for s, l, m in key if int(l) != 0]
    items.sort()
    if len({s for s, _, _ in items}) != len(items):
        raise ValueError("repeated site in key")
    for _, l, m in items:
        if abs(m) > l:
            raise ValueError(f"invalid harmonic index ({l}, {m})")
    return tuple(items)


def multiply_keys(ka, kb, table):
    """Expand the product of two basis monomials with a single-site table.

    ``table(l1, m1, l2, m2)`` returns ``[(l, coeff), ...]`` for the product of
    two basis elements at one site (with magnetic number m1 + m2).
    Yields ``(key, coeff)`` pairs.
    """
    da = {s: (l, m) for s, l, m in ka}
    db = {s: (l, m) for s, l, m in kb}
    shared = sorted(set(da) & set(db))
    fixed = [(s, l, m) for s, l, m in ka if s not in db] + [
        (s, l, m) for s, l, m in kb if s not in da
    ]
    if not shared:
        yield normal_key(fixed), 1.0
        return
    options = []
    for s in shared:
        (l1, m1), (l2, m2) = da[s], db[s]
        options.append([((s, l, m1 + m2), c) for l, c in table(l1, m1, l2, m2)])
    for combo in itertools.product(*options):
        c = 1.0
        for _, ci in combo:
            c *= ci
        yield normal_key(fixed + [t for t, _ in combo]), c


def _classical_table(l1, m1, l2, m2):
    return product_table(l1, l2)[(m1, m2)]


def product_region(a: LatticeObservable, b: LatticeObservable, table=_classical_table):
    out = {}
    for ka, va in a.coeffs.items():
        for kb, vb in b.coeffs.items():
            for k, c in multiply_keys(ka, kb, table):
                out[k] = out.get(k, 0j) + va * vb * c
    region = a.region if a.region == b.region else a.region | b.region
    return LatticeObservable(region, out)


def quantum_table(j):
    """Single-site product table of the normalized HS basis at spin j."""
    ctx = context(j)

    def table(l1, m1, l2, m2):
        return list(hs_product_coeffs(ctx, l1, m1, l2, m2).items())

    return table


@lru_cache(maxsize=None)
def bracket_table(l1: int, m1: int, l2: int, m2: int):
    """{Y_{l1 m1}, Y_{l2 m2}} = sum_l c_l Y_{l, m1+m2} as [(l, c_l), ...]."""
    f = poisson_bracket(SphericalFunction.harmonic(l1, m1), SphericalFunction.harmonic(l2, m2))
    M = m1 + m2
    out = []
    for l in range(abs(M), f.band_limit + 1):
        v = f[(l, M)]
        if abs(v) > 1e-13:
            out.append((l, v.real if abs(v.imag) < 1e-15 else v))
    return tuple(out)


def poisson_bracket_region(a: LatticeObservable, b: LatticeObservable) -> LatticeObservable:
    """Site-wise Leibniz expansion of the product Poisson bracket."""
    out = {}
    for ka, va in a.coeffs.items():
        da = {s: (l, m) for s, l, m in ka}
        for kb, vb in b.coeffs.items():
            db = {s: (l, m) for s, l, m in kb}
            shared = sorted(set(da) & set(db))
            for x in shared:
                (l1, m1), (l2, m2) = da[x], db[x]
                br = bracket_table(l1, m1, l2, m2)
                if not br:
                    continue
                ra = tuple(t for t in ka if t[0] != x)
                rb = tuple(t for t in kb if t[0] != x)
                for k, c in multiply_keys(ra, rb, _classical_table):
                    for l, cb in br:
                        nk = normal_key(k + ((x, l, m1 + m2),))
                        out[nk] = out.get(nk, 0j) + va * vb * c * cb
    region = a.region if a.region == b.region else a.region | b.region
    return LatticeObservable(region, out)


def embed(a: LatticeObservable, region: Region) -> LatticeObservable:
    """View ``a`` as an observable on a larger region (tensor with constants)."""
    if not a.region.issubset(region):
        raise ValueError(f"{a.region} is not contained in {region}")
    return LatticeObservable(region, a.coeffs)


def restrict(a: LatticeObservable, region: Region) -> LatticeObservable:
    """Inverse of :func:`embed`; the support of ``a`` must lie in ``region``."""
    if not a.support().issubset(region):
        raise ValueError("observable depends on sites outside the target region")
    return LatticeObservable(region, a.coeffs)


# ---------------------------------------------------------------------------
# Quantization on regions


def check_dim(j, n_sites: int) -> int:
    dim = (int(round(2 * float(j))) + 1) ** n_sites
    if dim > MAX_DENSE_DIM:
        raise GuardError(f"dense dimension {dim} exceeds guard {MAX_DENSE_DIM}")
    return dim


def _kron_all(mats):
    out = np.ones((1, 1), dtype=complex)
    for M in mats:
        out = np.kron(out, M)
    return out


def quantize_region(j, a: LatticeObservable, region: Region | None = None) -> np.ndarray:
    """Q_j^Lambda(a) as a dense matrix on the sites of ``region``."""
    ctx = context(j)
    region = a.region if region is None else region
    dim = check_dim(ctx.j, len(region))
    I = np.eye(ctx.dim, dtype=complex)
    A = np.zeros((dim, dim), dtype=complex)
    pos = {s: i for i, s in enumerate(region)}
    for k, v in a.coeffs.items():
        mats = [I] * len(region)
        skip = False
        for s, l, m in k:
            if s not in pos:
                raise ValueError(f"site {s} outside region {region}")
            if l > ctx.two_j:
                skip = True
                break
            mats[pos[s]] = ctx.quantized_harmonic(l, m)
        if not skip:
            A += v * _kron_all(mats)
    return A


def hs_basis_region(j, key, region: Region) -> np.ndarray:
    """Tensor product of normalized HS basis elements for a key."""
    ctx = context(j)
    pos = {s: i for i, s in enumerate(region)}
    mats = [np.eye(ctx.dim, dtype=complex)] * len(region)
    for s, l, m in key:
        mats[pos[s]] = ctx.quantized_harmonic(l, m) / math.sqrt(c_coeff(ctx, l))
    return _kron_all(mats)


def _all_keys(two_j: int, region: Region, lmax: int | None = None):
    L = two_j if lmax is None else min(lmax, two_j)
    per_site = [[(0, 0)] + [(l, m) for l, m in lm_pairs(L) if l > 0] for _ in region]
    for combo in itertools.product(*per_site):
        yield normal_key([(s, l, m) for s, (l, m) in zip(region, combo)])


def dequantize_region(j, A: np.ndarray, region: Region) -> LatticeObservable:
    """Inverse of :func:`quantize_region` on the full matrix algebra."""
    ctx = context(j)
    dim = check_dim(ctx.j, len(region))
    if A.shape != (dim, dim):
        raise ValueError("matrix does not match region dimension")
    out = {}
    for k in _all_keys(ctx.two_j, region):
        Q = quantize_region(ctx, LatticeObservable(region, {k: 1.0}), region)
        w = 1.0
        for _, l, _ in k:
            w *= (2 * l + 1) / c_coeff(ctx, l)
        v = w * np.vdot(Q, A) / dim
        if abs(v) > 1e-15:
            out[k] = v
    return LatticeObservable(region, out)


def hs_expand_region(j, A: np.ndarray, region: Region, tol: float = 1e-14) -> dict:
    """Coefficients of A in the tensor HS basis: sum_k x_k Y_{j|k}."""
    ctx = context(j)
    dim = ctx.dim ** len(region)
    out = {}
    for k in _all_keys(ctx.two_j, region):
        B = hs_basis_region(ctx, k, region)
        w = 1.0
        for _, l, _ in k:
            w *= 2 * l + 1
        v = w * np.vdot(B, A) / dim
        if abs(v) > tol:
            out[k] = v
    return out


# ---------------------------------------------------------------------------
# Potentials


@dataclass
class Term:
    shape: Region
    observable: LatticeObservable


@dataclass
class PotentialFamily:
    """Translation-invariant finite-range potential on Z^d.

    Each term is an observable on a finite shape; the potential is the set of
    all lattice translates of all terms.
    """

    terms: list = field(default_factory=list)
    translation_invariant: bool = True

    def __post_init__(self):
        for i, t in enumerate(self.terms):
            if not t.observable.region.issubset(t.shape):
                raise ValueError(f"term {i}: observable outside its shape")
            if not t.observable.is_self_adjoint(1e-12):
                raise ValueError(f"self-adjointness violated at term {i}")

    @property
    def d(self) -> int:
        return self.terms[0].shape.d if self.terms else 1

    @property
    def max_arity(self) -> int:
        return max((len(t.shape) for t in self.terms), default=0)

    @property
    def max_diameter(self) -> float:
        out = 0.0
        for t in self.terms:
            for a, b in itertools.combinations(t.shape.sites, 2):
                out = max(out, math.dist(a, b))
        return out

    def is_zero(self) -> bool:
        return all(t.observable.max_abs() == 0 for t in self.terms)

    def scaled(self, c: float) -> "PotentialFamily":
        return PotentialFamily(
            [Term(t.shape, t.observable * c) for t in self.terms], self.translation_invariant
        )

    def translates_within(self, region: Region):
        """All translated terms (X, phi_X) with X contained in ``region``."""
        out = []
        seen = set()
        for i, t in enumerate(self.terms):
            o = t.shape.min
            for s in region:
                shift = tuple(a - b for a, b in zip(s, o))
                X = t.shape.translate(shift)
                if (i, X) in seen or not X.issubset(region):
                    continue
                seen.add((i, X))
                out.append((X, t.observable.translate(shift)))
        return out

    def translates_meeting(self, region: Region):
        """All translated terms (X, phi_X) with X meeting ``region``."""
        out = []
        seen = set()
        for i, t in enumerate(self.terms):
            for o in t.shape:
                for s in region:
                    shift = tuple(a - b for a, b in zip(s, o))
                    X = t.shape.translate(shift)
                    if (i, X) in seen:
                        continue
                    seen.add((i, X))
                    out.append((X, t.observable.translate(shift)))
        return out

    def range_closure(self, region: Region) -> Region:
        sites = list(region.sites)
        for X, _ in self.translates_meeting(region):
            sites.extend(X.sites)
        return Region(sites, d=region.d)


def single_site_potential(f: SphericalFunction, d: int = 1) -> PotentialFamily:
    o = (0,) * d
    shape = Region([o])
    return PotentialFamily([Term(shape, LatticeObservable.from_single(o, f, shape))])


def hamiltonian_classical(phi: PotentialFamily, region: Region) -> LatticeObservable:
    h = LatticeObservable(region, {})
    for _, obs in phi.translates_within(region):
        for k, v in obs.coeffs.items():
            h.coeffs[k] = h.coeffs.get(k, 0j) + v
    return h


def hamiltonian_quantum(j, phi: PotentialFamily, region: Region) -> np.ndarray:
    return quantize_region(j, hamiltonian_classical(phi, region), region)


def derivation_classical(phi: PotentialFamily, window: Region, a: LatticeObservable) -> LatticeObservable:
    """delta(a) = sum over translates X meeting the region of a of {a, phi_X}."""
    out = LatticeObservable(window, {})
    for X, obs in phi.translates_meeting(a.region):
        if not X.issubset(window):
            raise ValueError(f"window too small: term on {X} not contained in {window}")
        out = out + embed(poisson_bracket_region(a, obs), window)
    return LatticeObservable(window, out.coeffs)


def derivation_quantum(j, phi: PotentialFamily, window: Region, A: np.ndarray, support: Region | None = None) -> np.ndarray:
    """delta_j(A) = i [H_window, A].

    If ``support`` (the region A lives on) is given, the window must contain all
    translates meeting it, which makes the restricted infinite sum exact.
    """
    if support is not None:
        for X, _ in phi.translates_meeting(support):
            if not X.issubset(window):
                raise ValueError(f"window too small: term on {X} not contained in {window}")
    H = hamiltonian_quantum(j, phi, window)
    return 1j * (H @ A - A @ H)


# ---------------------------------------------------------------------------
# Norms of potentials


@lru_cache(maxsize=8)
def _interior_grid(n: int):
    theta = np.linspace(0.0, np.pi, n + 2)[1:-1]
    phi = np.linspace(0.0, 2 * np.pi, 2 * n, endpoint=False)
    A, B = np.meshgrid(theta, phi, indexing="ij")
    return A.ravel(), B.ravel()


def grid_sup(obs: LatticeObservable, weight=None, n: int | None = None, max_points: int = 400_000) -> float:
    """Grid estimate of sup |sum_k w(k) c_k Y_k| over (S^2)^support.

    ``weight(key)`` rescales coefficients (e.g. Sobolev factors).  When the
    product grid would exceed ``max_points`` the triangle-inequality bound
    sum |w c| (valid because |Y| <= 1) is returned instead.
    """
    coeffs = {k: (weight(k) if weight else 1.0) * v for k, v in obs.coeffs.items()}
    coeffs = {k: v for k, v in coeffs.items() if v != 0}
    if not coeffs:
        return 0.0
    sites = obs.support().sites
    L = max((l for k in coeffs for _, l, _ in k), default=0)
    if n is None:
        n = max(4 * L, 8)
    T, P = sup_grid(n)
    if len(T) ** max(len(sites), 1) > max_points:
        return float(sum(abs(v) for v in coeffs.values()))
    Y = sph_harm_table(L, T, P)

    shape = [len(T)] * len(sites)
    total = np.zeros(shape, dtype=complex) if sites else np.zeros((), dtype=complex)
    pos = {s: i for i, s in enumerate(sites)}
    for k, v in coeffs.items():
        term = np.array(v, dtype=complex)
        for s in sites:
            f = next((Y[lm_index(l, m)] for t, l, m in k if t == s), None)
            vec = np.ones(len(T)) if f is None else f
            idx = [None] * len(sites)
            idx[pos[s]] = slice(None)
            term = term * vec[tuple(idx)]
        total = total + term
    return float(np.max(np.abs(total)))


def operator_norm(A: np.ndarray) -> float:
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A, 2))


def c1_norm(obs: LatticeObservable, n: int | None = None) -> float:
    """sup |a| plus, per site, the grid sup of the spherical gradient norm."""
    val = grid_sup(obs, n=n)
    sites = obs.support().sites
    if not sites:
        return val
    L = obs.band_limit()
    n = max(4 * L, 8) if n is None else n
    T, P = _interior_grid(n)
    Y, dth, dph = derivative_tables(L, T, P)

    grads = 0.0
    for x in sites:
        # sup over the other sites is bounded by the coefficient l1 norm
        gt = np.zeros(len(T), dtype=complex)
        gp = np.zeros(len(T), dtype=complex)
        other = 0.0
        by_rest = {}
        for k, v in obs.coeffs.items():
            fx = next(((l, m) for t, l, m in k if t == x), None)
            if fx is None:
                continue
            rest = tuple(t for t in k if t[0] != x)
            by_rest.setdefault(rest, []).append((fx, v))
        for rest, items in by_rest.items():
            gt = sum(v * dth[lm_index(l, m)] for (l, m), v in items)
            gp = sum(v * dph[lm_index(l, m)] for (l, m), v in items) / np.sin(T)
            other += float(np.max(np.sqrt(np.abs(gt) ** 2 + np.abs(gp) ** 2)))
        grads += other
    return val + grads


def lambda_norm(phi: PotentialFamily, lam: float, mode: str = "quantum", j=None) -> float:
    """||Phi||_lambda = sum_m e^{lambda m} sup_x sum_{|X| = m+1, X ∋ x} ||Phi_X||.

    ``mode='quantum'`` uses operator norms of Q_j(phi_X); ``mode='classical'``
    uses the C^1 surrogate :func:`c1_norm`.  For a translation-invariant
    potential the sup over x is attained at every site, and each term shape
    contributes once per site it covers.
    """
    total = 0.0
    for t in phi.terms:
        if t.observable.max_abs() == 0:
            continue
        if mode == "quantum":
            if j is None:
                raise ValueError("quantum mode needs a spin")
            nrm = operator_norm(quantize_region(j, t.observable, t.shape))
        elif mode == "classical":
            nrm = c1_norm(t.observable)
        else:
            raise ValueError(f"unknown mode {mode!r}")
        m = len(t.shape) - 1
        total += math.exp(lam * m) * len(t.shape) * nrm
    return total


def analyticity_radius(phi: PotentialFamily, lam: float, j) -> float:
    """lambda / (2 ||Phi_j||_lambda): radius of convergence of the tau series."""
    n = lambda_norm(phi, lam, "quantum", j)
    return math.inf if n == 0 else lam / (2 * n)


def rotate_site(a: LatticeObservable, site, euler) -> LatticeObservable:
    """Apply R_x: the rotation sigma_x -> R^{-1} sigma_x at one site.

    The m index at ``site`` transforms with the Wigner matrix D^l(R).
    """
    from .su2_special import wigner_D

    x = _site(site)
    cache = {}
    out = {}
    for k, v in a.coeffs.items():
        fx = next(((l, m) for t, l, m in k if t == x), None)
        if fx is None:
            out[k] = out.get(k, 0j) + v
            continue
        l, m = fx
        if l not in cache:
            cache[l] = wigner_D(l, *euler)
        D = cache[l]
        rest = [t for t in k if t[0] != x]
        for mp in range(-l, l + 1):
            c = D[l - mp, l - m]
            if c != 0:
                nk = normal_key(rest + [(x, l, mp)])
                out[nk] = out.get(nk, 0j) + v * c
    return LatticeObservable(a.region, out)
