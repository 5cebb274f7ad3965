"""Critical inverse temperatures and truncated Kirkwood-Salzburg operators.

Moment vectors are indexed by canonical keys: a key's region is translated so
that its lexicographic minimum is the minimum of the truncation's base region
(translation invariance), and only regions contained in the base region with
every l in [1, lmax] are kept.  Everything else produced by the operator is
dropped and its coefficient mass reported.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
import math

import mpmath
import numpy as np

from .berezin import context, haar_rule
from .equilibrium import MomentVector
from .lattice import (
    LatticeObservable,
    PotentialFamily,
    Region,
    _classical_table,
    grid_sup,
    multiply_keys,
    normal_key,
    quantum_table,
    rotate_site,
)
from .sphere_calculus import SphericalFunction, c2_norm, sobolev_scale, sup_norm
from .su2_special import lm_pairs, wigner_D


class DivergenceError(ValueError):
    """K_s diverges for s <= 7/4."""


# ---------------------------------------------------------------------------
# Constants


@dataclass(frozen=True)
class KsValue:
    value: float
    lower: float
    upper: float
    n_terms: int

    @property
    def tail_width(self) -> float:
        return self.upper - self.lower


def _ks_term(l, s):
    return (2 * l + 1) ** 2.5 / (1 + l * (l + 1)) ** s


def _ks_tail_integral(a: float, s: float) -> float:
    # int_a^inf (2x+1)^{5/2} / (1+x+x^2)^s dx with u = 2x+1
    f = lambda u: u**2.5 * 4**s / (u * u + 3) ** s / 2  # noqa: E731
    with mpmath.workdps(30):
        return float(mpmath.quad(f, [2 * a + 1, mpmath.inf]))


@lru_cache(maxsize=None)
def k_s_bounds(s: float = 2, tol: float = 1e-8, n_terms: int | None = None) -> KsValue:
    """K_s = sum_l (2l+1)^{5/2}/[1+l(l+1)]^s with a certified tail bracket.

    For convex decreasing terms f,
    int_{N+1}^inf f + f(N+1)/2 <= sum_{l>N} f(l) <= int_{N+1/2}^inf f.
    N is doubled until the bracket is narrower than ``tol``.
    """
    if s <= 1.75:
        raise DivergenceError(f"K_s diverges for s = {s} (needs s > 7/4)")
    N = 64 if n_terms is None else n_terms
    while True:
        partial = math.fsum(_ks_term(l, s) for l in range(N + 1))
        lo = _ks_tail_integral(N + 1, s) + _ks_term(N + 1, s) / 2
        hi = _ks_tail_integral(N + 0.5, s)
        if hi - lo < tol or n_terms is not None:
            return KsValue(partial + (lo + hi) / 2, partial + lo, partial + hi, N)
        N *= 2


def k_s(s: float = 2, tol: float = 1e-8) -> float:
    return k_s_bounds(s, tol).value


def c_delta(mode: str = "spectral", lmax: int = 4) -> float:
    """Operator-norm constant of (1 - Laplacian) from C^2 to C^0.

    ``spectral`` returns 1 (the surrogate norms are built so that the needed
    inequality holds with constant 1).  ``ratio`` maximizes the ratio
    ||(1-Laplacian) f||_inf / ||f||_C2 over real and imaginary parts of the
    harmonics up to ``lmax`` and the constant; this is a lower estimate.
    """
    if mode == "spectral":
        return 1.0
    if mode != "ratio":
        raise ValueError(f"unknown mode {mode!r}")
    best = 1.0
    for l, m in lm_pairs(lmax):
        if l == 0 or m < 0:
            continue
        y = SphericalFunction.harmonic(l, m)
        for f in ((y + y.conj()) * 0.5, (y - y.conj()) * (-0.5j)):
            if f.effective_band_limit() == 0 and np.max(np.abs(f.coeffs)) < 1e-14:
                continue
            ratio = sup_norm(sobolev_scale(f, 1)) / c2_norm(f)
            best = max(best, ratio)
    return best


def term_norm(obs: LatticeObservable, s: int) -> float:
    """N_s(phi_X) = grid sup of the site-wise (1 - Laplacian)^s image."""

    def w(key):
        out = 1.0
        for _, l, _ in key:
            out *= (1 + l * (l + 1)) ** s
        return out

    return grid_sup(obs, weight=w)


def potential_norm(phi: PotentialFamily, eps: float = 0.0, s: int = 2, cdelta: float = 1.0, ks: float | None = None) -> float:
    """sum_m (e^eps K_s C^s)^m sup_x sum_{|X|=m+1, X ∋ x} N_s(phi_X)."""
    K = k_s(s) if ks is None else ks
    q = math.exp(eps) * K * cdelta**s
    total = 0.0
    for t in phi.terms:
        m = len(t.shape) - 1
        total += q**m * len(t.shape) * term_norm(t.observable, s)
    return total


def beta_classical(phi: PotentialFamily, s: int = 2, cdelta: float = 1.0) -> float:
    """log 2 / (2 C^s K_s ||phi||_{0,s}); +inf for the zero potential."""
    K = k_s(s)
    n = potential_norm(phi, 0.0, s, cdelta, K)
    if n == 0:
        return math.inf
    return math.log(2) / (2 * cdelta**s * K * n)


def beta_quantum(phi: PotentialFamily, eps: float = 1.0, s: int = 2, cdelta: float = 1.0) -> float:
    """eps/(1+e^eps) / (2 K_s C^s ||phi||_{eps,s}); +inf for the zero potential."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    K = k_s(s)
    n = potential_norm(phi, eps, s, cdelta, K)
    if n == 0:
        return math.inf
    return eps / (1 + math.exp(eps)) / (2 * K * cdelta**s * n)


def optimize_eps(phi: PotentialFamily, s: int = 2, grid=None):
    """Maximize beta_quantum over a grid of eps; returns (eps, beta)."""
    grid = np.linspace(0.05, 4.0, 80) if grid is None else grid
    vals = [beta_quantum(phi, float(e), s) for e in grid]
    i = int(np.argmax(vals))
    return float(grid[i]), float(vals[i])


def classical_norm_bound(phi, beta, s=2, cdelta=1.0) -> float:
    K = k_s(s)
    return math.exp(2 * cdelta**s * K * beta * potential_norm(phi, 0.0, s, cdelta, K)) - 1


def quantum_norm_bound(phi, beta, eps=1.0, s=2, cdelta=1.0) -> float:
    K = k_s(s)
    q = 2 / eps * beta * K * cdelta**s * potential_norm(phi, eps, s, cdelta, K)
    return math.inf if q >= 1 else math.exp(eps) * q / (1 - q)


# ---------------------------------------------------------------------------
# Kirkwood-Salzburg operators


@dataclass(frozen=True)
class Truncation:
    base_region: Region
    lmax: int
    n_max: int
    haar_degree: int

    def __post_init__(self):
        if self.lmax < 1 or self.n_max < 1:
            raise ValueError("lmax and n_max must be at least 1")


def ks_coefficient_classical(phi_X: LatticeObservable, x, euler, key) -> complex:
    """Coefficient of Y_key in (1 - R_x) phi_X, computed from coefficients."""
    d = phi_X - rotate_site(phi_X, x, euler)
    return d[key]


class _Index:
    """Canonical truncated key set; position 0 is the empty key."""

    def __init__(self, t: Truncation, lmax: int):
        from .equilibrium import moment_keys

        base = t.base_region
        self.base = base
        self.origin = base.min
        self.lmax = lmax
        keys = [k for k in moment_keys(base, lmax) if not k or k[0][0] == self.origin]
        self.keys = keys
        self.pos = {k: i for i, k in enumerate(keys)}

    def __len__(self):
        return len(self.keys)

    def canonical(self, key):
        if not key:
            return key
        lo = key[0][0]
        shift = tuple(a - b for a, b in zip(self.origin, lo))
        return tuple((tuple(a + b for a, b in zip(s, shift)), l, m) for s, l, m in key)

    def lookup(self, key):
        return self.pos.get(self.canonical(key))


def _rotation_arrays(obs: LatticeObservable, x, haar):
    """Coefficients of R_x obs for every Haar node: dict key -> array."""
    out = {}
    cache = {}
    for k, v in obs.coeffs.items():
        fx = next(((l, m) for s, l, m in k if s == x), None)
        if fx is None:
            out[k] = out.get(k, 0) + v * np.ones(len(haar))
            continue
        l, m = fx
        if l not in cache:
            cache[l] = np.array(
                [wigner_D(l, a, b, g) for a, b, g in haar.nodes()]
            )  # (nodes, 2l+1, 2l+1)
        D = cache[l]
        rest = [t for t in k if t[0] != x]
        for mp in range(-l, l + 1):
            nk = normal_key(rest + [(x, l, mp)])
            out[nk] = out.get(nk, 0) + v * D[:, l - mp, l - m]
    return out


def _mul_arrays(A: dict, B: dict, table, tol=0.0):
    out = {}
    for ka, va in A.items():
        for kb, vb in B.items():
            prod = va * vb
            for k, c in multiply_keys(ka, kb, table):
                if k in out:
                    out[k] = out[k] + c * prod
                else:
                    out[k] = c * prod
    return out


def _add_arrays(A: dict, B: dict, sign=1.0):
    out = dict(A)
    for k, v in B.items():
        out[k] = out[k] + sign * v if k in out else sign * v
    return out


def _haar_average(A: dict, weights, tol=1e-15):
    out = {}
    for k, v in A.items():
        c = complex(np.dot(weights, v))
        if abs(c) > tol:
            out[k] = c
    return out


def classical_kernels(phi: PotentialFamily, x, n_max: int, haar_degree: int):
    """G_n = int (sum_{X ∋ x} (1 - R_x) phi_X)^n dR for n = 1..n_max."""
    haar = haar_rule(haar_degree)
    region = Region([x])
    psi = {}
    for X, obs in phi.translates_meeting(region):
        if x not in X:
            continue
        const = {k: v * np.ones(len(haar)) for k, v in obs.coeffs.items()}
        psi = _add_arrays(psi, const)
        psi = _add_arrays(psi, _rotation_arrays(obs, x, haar), -1.0)
    psi = {k: v for k, v in psi.items() if np.max(np.abs(v)) > 1e-15}
    kernels = []
    power = {(): np.ones(len(haar), dtype=complex)}
    for _ in range(n_max):
        power = _mul_arrays(power, psi, _classical_table)
        kernels.append(_haar_average(power, haar.weights))
    return kernels


def quantum_kernels(j, phi: PotentialFamily, x, n_max: int, haar_degree: int):
    """G_n = int D* ad_H^n(D) dR in the normalized HS basis, n = 1..n_max.

    Uses W_q = sum_X (Q(R_x phi_X) W_{q-1} - W_{q-1} Q(phi_X)) with X ranging
    over translates meeting supp(W_{q-1}) or x; other terms commute.
    """
    ctx = context(j)
    haar = haar_rule(haar_degree)
    table = quantum_table(ctx)

    def hs_coeffs(obs):
        # Q_j(Y_lm) = sqrt(c_{j,l}) Y_{j|l,m}; drop l > 2j
        out = {}
        for k, v in obs.coeffs.items():
            if any(l > ctx.two_j for _, l, _ in k):
                continue
            w = 1.0
            for _, l, _ in k:
                w *= math.sqrt(ctx.c(l))
            out[k] = v * w
        return out

    ones = np.ones(len(haar), dtype=complex)
    W = {(): ones}
    kernels = []
    for _ in range(n_max):
        sites = {x} | {s for k in W for s, _, _ in k}
        new = {}
        for X, obs in phi.translates_meeting(Region(sites)):
            q = LatticeObservable(X, hs_coeffs(obs))
            Phi = {k: v * ones for k, v in q.coeffs.items()}
            PhiR = _rotation_arrays(q, x, haar) if x in X else Phi
            new = _add_arrays(new, _mul_arrays(PhiR, W, table))
            new = _add_arrays(new, _mul_arrays(W, Phi, table), -1.0)
        W = {k: v for k, v in new.items() if np.max(np.abs(v)) > 1e-15}
        kernels.append(_haar_average(W, haar.weights))
    return kernels


@dataclass
class KSOperator:
    """Dense matrix of the truncated operator on the canonical key set."""

    matrix: np.ndarray
    keys: list
    dropped_mass: float
    mode: str
    beta: float

    def apply(self, f: np.ndarray) -> np.ndarray:
        return self.matrix @ f

    def to_vector(self, mv: MomentVector) -> np.ndarray:
        return np.array([mv[k] for k in self.keys], dtype=complex)

    def to_moments(self, v: np.ndarray) -> MomentVector:
        return MomentVector(dict(zip(self.keys, v)))

    def delta(self) -> np.ndarray:
        d = np.zeros(len(self.keys), dtype=complex)
        d[0] = 1.0
        return d


def _assemble(kernels, index: _Index, beta: float, table, coeff_of_n, left_target=True):
    n = len(index)
    M = np.zeros((n, n), dtype=complex)
    dropped = 0.0
    for row, key in enumerate(index.keys):
        if not key:
            continue
        Yk = {key: 1.0}
        row_drop = 0.0
        for order, G in enumerate(kernels, start=1):
            c_n = coeff_of_n(order)
            if c_n == 0:
                continue
            prod = _mul_arrays(Yk, G, table) if left_target else _mul_arrays(G, Yk, table)
            for k, v in prod.items():
                col = index.lookup(k) if all(l <= index.lmax for _, l, _ in k) else None
                if col is None:
                    row_drop += abs(c_n * v)
                else:
                    M[row, col] += c_n * v
        dropped = max(dropped, row_drop)
    return M, dropped


def ks_operator_classical(phi: PotentialFamily, beta: float, t: Truncation) -> KSOperator:
    if not phi.translation_invariant:
        raise ValueError("the KS surrogate needs a translation-invariant potential")
    index = _Index(t, t.lmax)
    kernels = classical_kernels(phi, index.origin, t.n_max, t.haar_degree)
    M, dropped = _assemble(
        kernels, index, beta, _classical_table, lambda n: -(beta**n) / math.factorial(n)
    )
    return KSOperator(M, index.keys, dropped, "classical", beta)


def ks_operator_quantum(j, phi: PotentialFamily, beta: float, t: Truncation) -> KSOperator:
    ctx = context(j)
    if t.lmax > ctx.two_j:
        raise ValueError("lmax must not exceed 2j")
    if not phi.translation_invariant:
        raise ValueError("the KS surrogate needs a translation-invariant potential")
    index = _Index(t, t.lmax)
    kernels = quantum_kernels(ctx, phi, index.origin, t.n_max, t.haar_degree)
    M, dropped = _assemble(
        kernels, index, beta, quantum_table(ctx), lambda n: -((-beta) ** n) / math.factorial(n)
    )
    return KSOperator(M, index.keys, dropped, f"quantum(j={ctx.j})", beta)


def ks_apply_classical(phi, beta, f: MomentVector, t: Truncation) -> MomentVector:
    op = ks_operator_classical(phi, beta, t)
    return op.to_moments(op.apply(op.to_vector(f)))


def ks_apply_quantum(j, phi, beta, f: MomentVector, t: Truncation) -> MomentVector:
    op = ks_operator_quantum(j, phi, beta, t)
    return op.to_moments(op.apply(op.to_vector(f)))


@dataclass
class KSReport:
    beta: float
    theoretical_norm_bound: float
    empirical_norm_estimate: float
    iterations: int
    final_residual: float
    moments: MomentVector
    converged: bool = True
    residual_history: list = field(default_factory=list)
    residual_ratio: float = 0.0
    matrix_norm: float = 0.0
    dropped_mass: float = 0.0
    warning: str | None = None

    def summary(self) -> dict:
        return {
            "beta": self.beta,
            "theoretical_norm_bound": self.theoretical_norm_bound,
            "empirical_norm_estimate": self.empirical_norm_estimate,
            "matrix_norm": self.matrix_norm,
            "iterations": self.iterations,
            "final_residual": self.final_residual,
            "residual_ratio": self.residual_ratio,
            "dropped_mass": self.dropped_mass,
            "converged": self.converged,
            "warning": self.warning,
        }


def empirical_operator_norm(apply, t, samples: int = 64, seed: int = 0) -> float:
    """max ||L f||_inf over seeded random f with unit-modulus entries.

    ``t`` is the vector length (or anything with ``len``).
    """
    n = t if isinstance(t, (int, np.integer)) else len(t)
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(samples):
        f = np.exp(2j * np.pi * rng.random(n))
        best = max(best, float(np.max(np.abs(apply(f)), initial=0.0)))
    return best


def fixed_point(op: KSOperator, tol: float = 1e-14, k_max: int = 500):
    """omega^{k+1} = delta + L omega^k from omega^0 = delta."""
    d = op.delta()
    w = d.copy()
    hist = []
    for k in range(1, k_max + 1):
        nw = d + op.apply(w)
        r = float(np.max(np.abs(nw - w)))
        hist.append(r)
        w = nw
        if r < tol:
            return w, k, hist, True
    return w, k_max, hist, False


def _ratio(hist):
    # geometric residual ratio over the steps above roundoff
    ratios = [b / a for a, b in zip(hist, hist[1:]) if a > 1e-13 and b > 0]
    return max(ratios) if ratios else 0.0


def _report(op, bound, threshold, tol, k_max, seed):
    w, k, hist, ok = fixed_point(op, tol, k_max)
    warn = None
    if op.beta >= threshold:
        warn = f"beta={op.beta} is not below the critical value {threshold}"
    return KSReport(
        beta=op.beta,
        theoretical_norm_bound=bound,
        empirical_norm_estimate=empirical_operator_norm(op.apply, len(op.keys), 32, seed),
        iterations=k,
        final_residual=hist[-1] if hist else 0.0,
        moments=op.to_moments(w),
        converged=ok,
        residual_history=hist,
        residual_ratio=_ratio(hist),
        matrix_norm=float(np.max(np.sum(np.abs(op.matrix), axis=1))),
        dropped_mass=op.dropped_mass,
        warning=warn,
    )


def ks_solve_classical(phi, beta, t: Truncation, s: int = 2, tol: float = 1e-14, k_max: int = 500, seed: int = 0) -> KSReport:
    op = ks_operator_classical(phi, beta, t)
    return _report(op, classical_norm_bound(phi, beta, s), beta_classical(phi, s), tol, k_max, seed)


def ks_solve_quantum(j, phi, beta, t: Truncation, eps: float = 1.0, s: int = 2, tol: float = 1e-14, k_max: int = 500, seed: int = 0) -> KSReport:
    op = ks_operator_quantum(j, phi, beta, t)
    return _report(op, quantum_norm_bound(phi, beta, eps, s), beta_quantum(phi, eps, s), tol, k_max, seed)
