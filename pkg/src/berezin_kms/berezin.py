"""Single-site Berezin quantization.

Matrices act on C^{2j+1} in the basis |j, m>, m = j, j-1, ..., -j.  The
coherent state at sigma = (theta, phi) is
``|j, sigma> = D^j(phi, theta, 0) |j, j>`` and

    Q_j(a) = int a(sigma) |j, sigma><j, sigma| d mu_j(sigma),   mu_j = (2j+1) mu0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
import math

import numpy as np
from scipy.special import roots_legendre

from .su2_special import (
    clebsch_gordan,
    lm_index,
    lm_pairs,
    six_j,
    spin_matrices,
    twice,
    wigner_D,
)
from .sphere_calculus import SphericalFunction, SphereQuadrature, analyze, quad_rule


class SpinContext:
    """Spin-j data shared by all single-site operations (immutable)."""

    def __init__(self, j):
        self.two_j = twice(j)
        if self.two_j < 0:
            raise ValueError("spin must be non-negative")
        self.j = self.two_j / 2
        self.dim = self.two_j + 1
        self.J1, self.J2, self.J3 = spin_matrices(self.j)
        self.m_values = self.j - np.arange(self.dim)
        self._qy = {}

    def __repr__(self) -> str:
        return f"SpinContext(j={self.j})"

    def __eq__(self, other):
        return isinstance(other, SpinContext) and other.two_j == self.two_j

    def __hash__(self):
        return hash(("SpinContext", self.two_j))

    def index(self, m) -> int:
        """Row of |j, m> in the m = j..-j ordering."""
        return int(round(self.j - m))

    def c(self, l: int) -> float:
        return c_coeff(self, l)

    def quantized_harmonic(self, l: int, m: int) -> np.ndarray:
        """Closed-form Q_j(Y_lm) (cached, read-only)."""
        key = (l, m)
        if key not in self._qy:
            A = _quantized_harmonic(self.two_j, l, m)
            A.setflags(write=False)
            self._qy[key] = A
        return self._qy[key]


@lru_cache(maxsize=None)
def get_context(two_j: int) -> SpinContext:
    return SpinContext(two_j / 2)


def context(j) -> SpinContext:
    """Shared :class:`SpinContext` for spin ``j``."""
    if isinstance(j, SpinContext):
        return j
    return get_context(twice(j))


def _quantized_harmonic(two_j: int, l: int, m: int) -> np.ndarray:
    j = two_j / 2
    dim = two_j + 1
    A = np.zeros((dim, dim), dtype=complex)
    if l > two_j:
        return A
    pref = clebsch_gordan(l, 0, j, j, j, j)
    for col in range(dim):
        mp = j - col
        row_m = mp + m
        if abs(row_m) > j:
            continue
        A[int(round(j - row_m)), col] = pref * clebsch_gordan(l, m, j, mp, j, row_m)
    return A


def c_coeff(ctx, l: int) -> float:
    """c_{j,l} = <l 0; j j | j j>^2, zero for l > 2j."""
    ctx = context(ctx)
    if l < 0:
        raise ValueError("l must be non-negative")
    if l > ctx.two_j:
        return 0.0
    return clebsch_gordan(l, 0, ctx.j, ctx.j, ctx.j, ctx.j) ** 2


def coherent_state(ctx, theta: float, phi: float) -> np.ndarray:
    ctx = context(ctx)
    return wigner_D(ctx.j, phi, theta, 0.0)[:, 0].copy()


def coherent_states(ctx, theta, phi) -> np.ndarray:
    """Columns are coherent states at the given points (vectorized)."""
    ctx = context(ctx)
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    # <j, m | D(phi, theta, 0) | j, j> = exp(-i m phi) d^j_{m j}(theta)
    m = ctx.m_values
    j = ctx.j
    c = np.cos(theta / 2)
    s = np.sin(theta / 2)
    k = np.arange(ctx.dim)  # j - m
    binom = np.array([math.comb(ctx.two_j, int(kk)) for kk in k], dtype=float)
    d = np.sqrt(binom)[:, None] * c[None, :] ** (ctx.two_j - k)[:, None] * s[None, :] ** k[:, None]
    return d * np.exp(-1j * np.outer(m, phi))


def quantize(ctx, f: SphericalFunction) -> np.ndarray:
    """Q_j(f) by the closed form, linear over the coefficients of f."""
    ctx = context(ctx)
    A = np.zeros((ctx.dim, ctx.dim), dtype=complex)
    for (l, m), v in f.to_dict().items():
        if l <= ctx.two_j:
            A += v * ctx.quantized_harmonic(l, m)
    return A


def quantize_by_quadrature(ctx, a, q: SphereQuadrature | None = None) -> np.ndarray:
    """Q_j(a) as the weighted sum of coherent-state projectors.

    ``a`` is a vectorized callable or a :class:`SphericalFunction`.
    """
    ctx = context(ctx)
    if isinstance(a, SphericalFunction):
        if q is None:
            q = quad_rule(ctx.two_j + a.band_limit)
        f = a
        a = lambda t, p: f(t, p)  # noqa: E731
    elif q is None:
        q = quad_rule(2 * ctx.two_j + 8)
    vals = np.asarray(a(q.theta, q.phi))
    V = coherent_states(ctx, q.theta, q.phi)
    return ctx.dim * (V * (q.weights * vals)) @ V.conj().T


def check_function(ctx, A: np.ndarray, lmax: int | None = None) -> SphericalFunction:
    """Fourier-Laplace coefficients of sigma -> <j, sigma| A |j, sigma>."""
    ctx = context(ctx)
    L = ctx.two_j if lmax is None else min(lmax, ctx.two_j)
    q = quad_rule(ctx.two_j + L)
    V = coherent_states(ctx, q.theta, q.phi)
    vals = np.einsum("in,ij,jn->n", V.conj(), A, V)
    return analyze(vals, L, q)


def hs_inner(ctx, A: np.ndarray, B: np.ndarray) -> complex:
    """Normalized Hilbert-Schmidt product tr(A* B)/(2j+1)."""
    ctx = context(ctx)
    if A.shape != (ctx.dim, ctx.dim) or B.shape != (ctx.dim, ctx.dim):
        raise ValueError("dimension mismatch")
    return complex(np.vdot(A, B) / ctx.dim)


def hs_basis(ctx, l: int, m: int) -> np.ndarray:
    """Normalized basis element Q_j(Y_lm)/sqrt(c_{j,l})."""
    ctx = context(ctx)
    if l > ctx.two_j or abs(m) > l:
        raise ValueError(f"no basis element (l={l}, m={m}) for j={ctx.j}")
    return ctx.quantized_harmonic(l, m) / math.sqrt(c_coeff(ctx, l))


def dequantize(ctx, A: np.ndarray) -> SphericalFunction:
    """Inverse of Q_j on M_{2j+1}: coefficients (2l+1)/c <Q(Y_lm)|A>_HS."""
    ctx = context(ctx)
    L = ctx.two_j
    out = np.zeros((L + 1) ** 2, dtype=complex)
    for l, m in lm_pairs(L):
        Q = ctx.quantized_harmonic(l, m)
        out[lm_index(l, m)] = (2 * l + 1) / c_coeff(ctx, l) * np.vdot(Q, A) / ctx.dim
    return SphericalFunction(out)


def hs_coefficients(ctx, A: np.ndarray) -> dict:
    """Expansion A = sum_{l, m} x_lm Y_{j|l, m} in the normalized HS basis."""
    ctx = context(ctx)
    out = {}
    for l, m in lm_pairs(ctx.two_j):
        out[(l, m)] = (2 * l + 1) * hs_inner(ctx, hs_basis(ctx, l, m), A)
    return out


@lru_cache(maxsize=None)
def _hs_product(two_j: int, l1: int, m1: int, l2: int, m2: int):
    j = two_j / 2
    M = m1 + m2
    out = {}
    for l in range(max(abs(l1 - l2), abs(M)), min(l1 + l2, two_j) + 1):
        val = (
            (-1) ** (two_j + l)
            * math.sqrt((2 * l + 1) * (two_j + 1))
            * clebsch_gordan(l1, m1, l2, m2, l, M)
            * six_j(j, j, l2, l, l1, j)
        )
        if val != 0.0:
            out[l] = val
    return out


def hs_product_coeffs(ctx, l1: int, m1: int, l2: int, m2: int) -> dict:
    """Coefficients x_l with Y_{j|l1,m1} Y_{j|l2,m2} = sum_l x_l Y_{j|l, m1+m2}.

    x_l = (-1)^{2j+l} sqrt((2l+1)(2j+1)) <l1 m1; l2 m2|l m1+m2> {j j l2; l l1 j},
    and |x_l| <= 1.
    """
    ctx = context(ctx)
    if max(l1, l2) > ctx.two_j:
        raise ValueError("basis index exceeds 2j")
    return dict(_hs_product(ctx.two_j, l1, m1, l2, m2))


def rotate_operator(ctx, euler, A: np.ndarray) -> np.ndarray:
    """Ad_{D(R)} A = D A D*."""
    ctx = context(ctx)
    D = wigner_D(ctx.j, *euler)
    return D @ A @ D.conj().T


@dataclass(frozen=True)
class HaarQuadrature:
    """Product rule on SU(2) in Euler angles, weights summing to one."""

    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    weights: np.ndarray
    degree: int

    def __len__(self):
        return len(self.weights)

    def nodes(self):
        return zip(self.alpha, self.beta, self.gamma)


@lru_cache(maxsize=16)
def haar_rule(degree: int) -> HaarQuadrature:
    """Exact on products of Wigner matrix elements of total spin <= degree."""
    n_ang = degree + 1
    n_b = (degree + 2) // 2
    x, w = roots_legendre(n_b)
    ang = 2 * np.pi * np.arange(n_ang) / n_ang
    A, B, G = np.meshgrid(ang, np.arccos(x), ang, indexing="ij")
    W = np.broadcast_to((w / 2)[None, :, None] / n_ang**2, A.shape)
    return HaarQuadrature(A.ravel(), B.ravel(), G.ravel(), np.array(W).ravel(), degree)
