"""Band-limited calculus on the unit sphere.

Functions are stored as Fourier-Laplace coefficient vectors in the Racah
normalization of :mod:`berezin_kms.su2_special`::

    a(sigma) = sum_{l, m} ahat(l, m) Y_lm(sigma),
    ahat(l, m) = (2l + 1) <Y_lm, a>_{L^2(mu0)},

with ``mu0`` the rotation-invariant probability measure.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np
from scipy.special import roots_legendre

from .su2_special import (
    clebsch_gordan,
    lm_index,
    lm_pairs,
    sph_harm_table,
    legendre_table,
)

# Symplectic normalization of the bracket, fixed by the DGR calibration
# (see ``semiclassics.dgr_defect``): {f, g} = KAPPA (f_t g_p - f_p g_t)/sin t.
KAPPA = -2.0


class SphericalFunction:
    """Finitely supported coefficient table over (l, m).

    ``coeffs`` is a dense complex vector indexed by :func:`lm_index`.
    """

    def __init__(self, coeffs, band_limit: int | None = None):
        c = np.asarray(coeffs, dtype=complex).ravel()
        L = int(round(math.sqrt(c.size))) - 1
        if (L + 1) ** 2 != c.size:
            raise ValueError("coefficient vector length must be a square")
        if band_limit is not None and band_limit != L:
            c = _resize(c, L, band_limit)
            L = band_limit
        self.coeffs = c
        self.band_limit = L

    @classmethod
    def zeros(cls, band_limit: int) -> "SphericalFunction":
        return cls(np.zeros((band_limit + 1) ** 2, dtype=complex))

    @classmethod
    def from_dict(cls, d: dict) -> "SphericalFunction":
        L = max((l for l, _ in d), default=0)
        f = cls.zeros(L)
        for (l, m), v in d.items():
            if abs(m) > l:
                raise ValueError(f"invalid index ({l}, {m})")
            f.coeffs[lm_index(l, m)] += v
        return f

    @classmethod
    def harmonic(cls, l: int, m: int, value: complex = 1.0) -> "SphericalFunction":
        return cls.from_dict({(l, m): value})

    def __getitem__(self, lm) -> complex:
        l, m = lm
        if l > self.band_limit:
            return 0j
        return complex(self.coeffs[lm_index(l, m)])

    def to_dict(self, tol: float = 0.0) -> dict:
        return {
            lm: complex(self.coeffs[i])
            for i, lm in enumerate(lm_pairs(self.band_limit))
            if abs(self.coeffs[i]) > tol
        }

    def resized(self, band_limit: int) -> "SphericalFunction":
        return SphericalFunction(_resize(self.coeffs, self.band_limit, band_limit))

    def trimmed(self, tol: float = 0.0) -> "SphericalFunction":
        L = self.band_limit
        while L > 0 and np.all(
            np.abs(self.coeffs[lm_index(L, -L) : lm_index(L, L) + 1]) <= tol
        ):
            L -= 1
        return self.resized(L)

    def effective_band_limit(self, tol: float = 1e-13) -> int:
        return self.trimmed(tol).band_limit

    def conj(self) -> "SphericalFunction":
        """Coefficients of the complex conjugate function."""
        out = np.zeros_like(self.coeffs)
        for l, m in lm_pairs(self.band_limit):
            out[lm_index(l, -m)] = (-1) ** m * np.conj(self.coeffs[lm_index(l, m)])
        return SphericalFunction(out)

    def is_self_adjoint(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.coeffs - self.conj().coeffs), initial=0.0) <= tol)

    def __add__(self, other):
        if not isinstance(other, SphericalFunction):
            other = SphericalFunction([other])
        L = max(self.band_limit, other.band_limit)
        return SphericalFunction(self.resized(L).coeffs + other.resized(L).coeffs)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, s):
        if isinstance(s, SphericalFunction):
            return product(self, s)
        return SphericalFunction(self.coeffs * s)

    def __rmul__(self, s):
        return self.__mul__(s)

    def __neg__(self):
        return SphericalFunction(-self.coeffs)

    def __call__(self, theta, phi):
        return synthesize(self, theta, phi)

    def __repr__(self) -> str:
        return f"SphericalFunction(band_limit={self.band_limit}, nnz={np.count_nonzero(self.coeffs)})"


def _resize(c: np.ndarray, L_old: int, L_new: int) -> np.ndarray:
    n_new = (L_new + 1) ** 2
    out = np.zeros(n_new, dtype=complex)
    k = min(c.size, n_new)
    out[:k] = c[:k]
    return out


@dataclass(frozen=True)
class SphereQuadrature:
    """Product rule: Gauss-Legendre in cos(theta) times uniform phi."""

    theta: np.ndarray
    phi: np.ndarray
    weights: np.ndarray
    exactness_degree: int
    n_theta: int
    n_phi: int

    @property
    def nodes(self):
        return list(zip(self.theta, self.phi))

    def integrate(self, values) -> complex:
        return np.tensordot(np.asarray(values), self.weights, axes=([-1], [0]))


@lru_cache(maxsize=64)
def quad_rule(degree: int) -> SphereQuadrature:
    """Quadrature exact for spherical polynomials of total degree ``degree``."""
    if degree < 0:
        raise ValueError("degree must be non-negative")
    nt = (degree + 2) // 2  # ceil((degree+1)/2)
    nphi = degree + 1
    x, w = roots_legendre(nt)
    theta = np.arccos(x)
    phi = 2 * np.pi * np.arange(nphi) / nphi
    T, P = np.meshgrid(theta, phi, indexing="ij")
    W = np.repeat(w[:, None] / 2 / nphi, nphi, axis=1)
    for arr in (T, P, W):
        arr.setflags(write=False)
    return SphereQuadrature(T.ravel(), P.ravel(), W.ravel(), degree, nt, nphi)


@lru_cache(maxsize=64)
def _ytable(lmax: int, degree: int) -> np.ndarray:
    q = quad_rule(degree)
    Y = sph_harm_table(lmax, q.theta, q.phi)
    Y.setflags(write=False)
    return Y


def analyze(samples, lmax: int, q: SphereQuadrature | None = None, return_flag: bool = False):
    """Fourier-Laplace coefficients of a function up to ``lmax``.

    ``samples`` is either a callable ``f(theta, phi)`` (vectorized) or an array of
    values on the nodes of ``q``.  With ``return_flag`` the result is paired with
    a boolean that is False when ``q`` is too coarse for exact recovery of a
    band-``lmax`` input.
    """
    if q is None:
        q = quad_rule(2 * lmax)
    vals = samples(q.theta, q.phi) if callable(samples) else np.asarray(samples)
    Y = _ytable(lmax, q.exactness_degree)
    ls = np.array([l for l, _ in lm_pairs(lmax)])
    c = (2 * ls + 1) * (Y.conj() @ (q.weights * vals))
    f = SphericalFunction(c)
    if return_flag:
        return f, q.exactness_degree >= 2 * lmax
    return f


def synthesize(f: SphericalFunction, theta, phi):
    """Pointwise value of sum coeffs * Y_lm."""
    Y = sph_harm_table(f.band_limit, theta, phi)
    val = np.tensordot(f.coeffs, Y, axes=(0, 0))
    return val if np.ndim(val) else complex(val)


def grid_values(f: SphericalFunction, q: SphereQuadrature) -> np.ndarray:
    L = f.band_limit
    return f.coeffs @ _ytable(L, q.exactness_degree)


@lru_cache(maxsize=None)
def product_table(l1: int, l2: int):
    """Coefficients c[L, m1, m2] with Y_{l1 m1} Y_{l2 m2} = sum_L c Y_{L, m1+m2}.

    Returned as ``{(m1, m2): [(L, coeff), ...]}``.
    """
    out = {}
    for m1 in range(-l1, l1 + 1):
        for m2 in range(-l2, l2 + 1):
            M = m1 + m2
            terms = []
            for L in range(max(abs(l1 - l2), abs(M)), l1 + l2 + 1):
                if (l1 + l2 + L) % 2:
                    continue
                c = clebsch_gordan(l1, 0, l2, 0, L, 0) * clebsch_gordan(l1, m1, l2, m2, L, M)
                if c != 0.0:
                    terms.append((L, c))
            out[(m1, m2)] = terms
    return out


def product(f: SphericalFunction, g: SphericalFunction) -> SphericalFunction:
    """Pointwise product via the Clebsch-Gordan product rule."""
    L = f.band_limit + g.band_limit
    out = np.zeros((L + 1) ** 2, dtype=complex)
    fd = f.to_dict()
    gd = g.to_dict()
    for (l1, m1), a in fd.items():
        for (l2, m2), b in gd.items():
            for Lp, c in product_table(l1, l2)[(m1, m2)]:
                out[lm_index(Lp, m1 + m2)] += a * b * c
    return SphericalFunction(out)


def derivative_tables(lmax: int, theta, phi):
    """Values of Y, dY/dtheta and dY/dphi for all harmonics up to ``lmax``."""
    Y = sph_harm_table(lmax + 1, theta, phi)
    n = (lmax + 1) ** 2
    dth = np.zeros((n,) + np.shape(Y)[1:], dtype=complex)
    dph = np.zeros_like(dth)
    e_p = np.exp(1j * np.asarray(phi, dtype=float))
    for l, m in lm_pairs(lmax):
        k = lm_index(l, m)
        dph[k] = 1j * m * Y[k]
        acc = 0
        if m + 1 <= l:
            acc = acc + 0.5 * math.sqrt((l - m) * (l + m + 1)) * np.conj(e_p) * Y[lm_index(l, m + 1)]
        if m - 1 >= -l:
            acc = acc - 0.5 * math.sqrt((l + m) * (l - m + 1)) * e_p * Y[lm_index(l, m - 1)]
        dth[k] = acc
    return Y[:n], dth, dph


def poisson_bracket(f: SphericalFunction, g: SphericalFunction) -> SphericalFunction:
    """{f, g} = KAPPA (d_t f d_p g - d_p f d_t g) / sin(theta), band limit Lf+Lg-1."""
    Lf, Lg = f.band_limit, g.band_limit
    Lout = max(Lf + Lg - 1, 0)
    if Lf == 0 or Lg == 0:
        return SphericalFunction.zeros(Lout)
    q = quad_rule(Lf + Lg + Lout + 2)
    _, ft, fp = derivative_tables(Lf, q.theta, q.phi)
    _, gt, gp = derivative_tables(Lg, q.theta, q.phi)
    fth, fph = f.coeffs @ ft, f.coeffs @ fp
    gth, gph = g.coeffs @ gt, g.coeffs @ gp
    vals = KAPPA * (fth * gph - fph * gth) / np.sin(q.theta)
    return analyze(vals, Lout, q)


def laplace_beltrami(f: SphericalFunction) -> SphericalFunction:
    ls = np.array([l for l, _ in lm_pairs(f.band_limit)])
    return SphericalFunction(-ls * (ls + 1) * f.coeffs)


def sobolev_scale(f: SphericalFunction, s: int) -> SphericalFunction:
    """Coefficients of (1 - Laplacian)^s f."""
    ls = np.array([l for l, _ in lm_pairs(f.band_limit)])
    return SphericalFunction((1.0 + ls * (ls + 1)) ** s * f.coeffs)


@lru_cache(maxsize=32)
def sup_grid(n: int):
    """Equispaced (theta, phi) grid including both poles, n+1 by 2n points."""
    theta = np.linspace(0.0, np.pi, n + 1)
    phi = np.linspace(0.0, 2 * np.pi, 2 * n, endpoint=False)
    T, P = np.meshgrid(theta, phi, indexing="ij")
    return T.ravel(), P.ravel()


def sup_norm(f: SphericalFunction, n: int | None = None) -> float:
    """Grid estimate of sup |f| (a lower bound, exact for zonal extrema at poles)."""
    if n is None:
        n = max(4 * f.band_limit, 8)
    T, P = sup_grid(n)
    return float(np.max(np.abs(synthesize(f, T, P))))


def spectral_sobolev_norm(f: SphericalFunction, s: int) -> float:
    """Grid sup of |(1 - Laplacian)^s f|."""
    if s < 0:
        raise ValueError("s must be non-negative")
    return sup_norm(sobolev_scale(f, s))


def c2_norm(f: SphericalFunction, n: int | None = None) -> float:
    """Coordinate C^2 norm surrogate: max of sup-norms of f and its derivatives
    up to order two in the (theta, phi) chart, sampled on an interior grid."""
    L = f.band_limit
    if n is None:
        n = max(4 * L, 8)
    theta = np.linspace(0.0, np.pi, n + 2)[1:-1]
    phi = np.linspace(0.0, 2 * np.pi, 2 * n, endpoint=False)
    T, P = np.meshgrid(theta, phi, indexing="ij")
    T, P = T.ravel(), P.ravel()
    h = 1e-4
    v = synthesize(f, T, P)
    vt = (synthesize(f, T + h, P) - synthesize(f, T - h, P)) / (2 * h)
    vp = (synthesize(f, T, P + h) - synthesize(f, T, P - h)) / (2 * h)
    vtt = (synthesize(f, T + h, P) - 2 * v + synthesize(f, T - h, P)) / h**2
    vpp = (synthesize(f, T, P + h) - 2 * v + synthesize(f, T, P - h)) / h**2
    vtp = (
        synthesize(f, T + h, P + h)
        - synthesize(f, T + h, P - h)
        - synthesize(f, T - h, P + h)
        + synthesize(f, T - h, P - h)
    ) / (4 * h * h)
    return float(max(np.max(np.abs(a)) for a in (v, vt, vp, vtt, vpp, vtp)))


def rotate(f: SphericalFunction, euler) -> SphericalFunction:
    """Coefficients of the rotated function sigma -> f(R^{-1} sigma).

    Each degree-l block transforms with the Wigner matrix D^l(R) acting on the
    m index; ``euler`` is (alpha, beta, gamma) in the zyz convention.
    """
    from .su2_special import wigner_D

    out = np.zeros_like(f.coeffs)
    for l in range(f.band_limit + 1):
        sl = slice(lm_index(l, -l), lm_index(l, l) + 1)
        # blocks are stored m = -l..l, Wigner matrices m = l..-l
        block = f.coeffs[sl][::-1]
        out[sl] = (wigner_D(l, *euler) @ block)[::-1]
    return SphericalFunction(out)
