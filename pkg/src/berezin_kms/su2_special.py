"""Angular-momentum special functions.

Conventions used everywhere in the package:

* Condon-Shortley phase for associated Legendre functions.
* Spherical harmonics are Racah (Schmidt semi-)normalized,
  ``Y_lm = sqrt((l-m)!/(l+m)!) P_lm(cos theta) exp(i m phi)``, so that
  ``|Y_lm| <= 1`` and ``Y_00 = 1``.
* Wigner matrices ``D^j_{mk}(a, b, g) = exp(-i m a) d^j_{mk}(b) exp(-i k g)``
  represent ``exp(-i a Jz) exp(-i b Jy) exp(-i g Jz)``; rows and columns are
  ordered ``m = j, j-1, ..., -j``.

Spins are passed as ints, floats or ``Fraction``; internally they are stored as
twice their value (:class:`HalfInt`) so half-integers stay exact.  Clebsch-Gordan
and 6j symbols are evaluated with exact rational arithmetic and rounded once.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
import math

import numpy as np


@dataclass(frozen=True, order=True)
class HalfInt:
    """A non-negative or signed half-integer stored as ``twice_value``."""

    twice_value: int

    @classmethod
    def of(cls, x) -> "HalfInt":
        if isinstance(x, HalfInt):
            return x
        t = 2 * Fraction(x).limit_denominator(2)
        if t.denominator != 1 or 2 * Fraction(x) != t:
            raise ValueError(f"{x!r} is not a half-integer")
        return cls(int(t))

    @property
    def value(self) -> float:
        return self.twice_value / 2

    def is_integer(self) -> bool:
        return self.twice_value % 2 == 0

    def __float__(self) -> float:
        return self.value

    def __repr__(self) -> str:
        t = self.twice_value
        return f"HalfInt({t // 2})" if t % 2 == 0 else f"HalfInt({t}/2)"


def twice(x) -> int:
    """Return ``2x`` as an int, checking that ``x`` is a half-integer."""
    return HalfInt.of(x).twice_value


@dataclass(frozen=True)
class CGKey:
    """Labels of the coefficient <j1 m1; j2 m2 | j m>, all stored doubled."""

    j1: int
    m1: int
    j2: int
    m2: int
    j: int
    m: int

    def __post_init__(self):
        for jj, mm in ((self.j1, self.m1), (self.j2, self.m2), (self.j, self.m)):
            if jj < 0 or abs(mm) > jj or (jj + mm) % 2:
                raise ValueError(f"invalid magnetic quantum number {mm}/2 for spin {jj}/2")

    @classmethod
    def of(cls, j1, m1, j2, m2, j, m) -> "CGKey":
        return cls(twice(j1), twice(m1), twice(j2), twice(m2), twice(j), twice(m))


def _fact(n2: int) -> int:
    # factorial of n2/2 where n2 is even and >= 0
    return math.factorial(n2 // 2)


def _triangle(a: int, b: int, c: int) -> bool:
    # doubled arguments
    return (
        c <= a + b
        and c >= abs(a - b)
        and (a + b + c) % 2 == 0
    )


@lru_cache(maxsize=None)
def _cg_twice(j1: int, m1: int, j2: int, m2: int, j: int, m: int) -> float:
    if m != m1 + m2:
        return 0.0
    if abs(m1) > j1 or abs(m2) > j2 or abs(m) > j:
        return 0.0
    if (j1 + m1) % 2 or (j2 + m2) % 2 or (j + m) % 2:
        return 0.0
    if not _triangle(j1, j2, j):
        return 0.0
    f = _fact
    pref = Fraction(
        (j + 1) * f(j + j1 - j2) * f(j - j1 + j2) * f(j1 + j2 - j),
        f(j1 + j2 + j + 2),
    ) * (f(j + m) * f(j - m) * f(j1 - m1) * f(j1 + m1) * f(j2 - m2) * f(j2 + m2))
    # Racah sum over k (all quantities halved below)
    a = (j1 + j2 - j) // 2
    b = (j1 - m1) // 2
    c = (j2 + m2) // 2
    d = (j - j2 + m1) // 2
    e = (j - j1 - m2) // 2
    kmin = max(0, -d, -e)
    kmax = min(a, b, c)
    s = Fraction(0)
    for k in range(kmin, kmax + 1):
        den = (
            math.factorial(k)
            * math.factorial(a - k)
            * math.factorial(b - k)
            * math.factorial(c - k)
            * math.factorial(d + k)
            * math.factorial(e + k)
        )
        s += Fraction((-1) ** k, den)
    if s == 0:
        return 0.0
    return math.copysign(math.sqrt(float(pref * s * s)), s)


def clebsch_gordan(j1, m1, j2, m2, j, m) -> float:
    """Clebsch-Gordan coefficient <j1 m1; j2 m2 | j m>.

    Returns 0 whenever a selection rule is violated.
    """
    return _cg_twice(twice(j1), twice(m1), twice(j2), twice(m2), twice(j), twice(m))


def cg_key(k: CGKey) -> float:
    return _cg_twice(k.j1, k.m1, k.j2, k.m2, k.j, k.m)


def _delta2(a: int, b: int, c: int) -> Fraction:
    # squared triangle coefficient, doubled arguments
    f = _fact
    return Fraction(f(a + b - c) * f(a - b + c) * f(-a + b + c), f(a + b + c + 2))


@lru_cache(maxsize=None)
def _six_j_twice(a: int, b: int, c: int, d: int, e: int, f_: int) -> float:
    for t in ((a, b, c), (a, e, f_), (d, b, f_), (d, e, c)):
        if not _triangle(*t):
            return 0.0
    pref = _delta2(a, b, c) * _delta2(a, e, f_) * _delta2(d, b, f_) * _delta2(d, e, c)
    t1 = (a + b + c) // 2
    t2 = (a + e + f_) // 2
    t3 = (d + b + f_) // 2
    t4 = (d + e + c) // 2
    u1 = (a + b + d + e) // 2
    u2 = (a + c + d + f_) // 2
    u3 = (b + c + e + f_) // 2
    s = Fraction(0)
    for t in range(max(t1, t2, t3, t4), min(u1, u2, u3) + 1):
        den = (
            math.factorial(t - t1)
            * math.factorial(t - t2)
            * math.factorial(t - t3)
            * math.factorial(t - t4)
            * math.factorial(u1 - t)
            * math.factorial(u2 - t)
            * math.factorial(u3 - t)
        )
        s += Fraction((-1) ** t * math.factorial(t + 1), den)
    if s == 0:
        return 0.0
    return math.copysign(math.sqrt(float(pref * s * s)), s)


def six_j(j1, j2, j3, j4, j5, j6) -> float:
    """Wigner 6j symbol {j1 j2 j3; j4 j5 j6} (0 if a triad is not a triangle)."""
    return _six_j_twice(twice(j1), twice(j2), twice(j3), twice(j4), twice(j5), twice(j6))


# ---------------------------------------------------------------------------
# Legendre functions and spherical harmonics


def _check_lm(l: int, m: int) -> None:
    if l < 0 or abs(m) > l:
        raise ValueError(f"invalid harmonic index (l={l}, m={m})")


def legendre_table(lmax: int, x) -> np.ndarray:
    """Semi-normalized associated Legendre functions for m >= 0.

    Returns an array ``P[l, m, ...]`` with
    ``P[l, m] = sqrt((l-m)!/(l+m)!) P_lm(x)`` (Condon-Shortley phase),
    computed with the standard stable recurrences.
    """
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0):
        raise ValueError("legendre argument outside [-1, 1]")
    s = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    out = np.zeros((lmax + 1, lmax + 1) + x.shape)
    out[0, 0] = 1.0
    for m in range(1, lmax + 1):
        # diagonal: P_mm = -sqrt((2m-1)/(2m)) s P_{m-1,m-1}
        out[m, m] = -np.sqrt((2 * m - 1) / (2 * m)) * s * out[m - 1, m - 1]
    for m in range(0, lmax):
        out[m + 1, m] = np.sqrt(2 * m + 1) * x * out[m, m]
        for l in range(m + 2, lmax + 1):
            a = (2 * l - 1) / np.sqrt((l - m) * (l + m))
            b = np.sqrt((l - 1 - m) * (l - 1 + m) / ((l - m) * (l + m)))
            out[l, m] = a * x * out[l - 1, m] - b * out[l - 2, m]
    return out


def assoc_legendre(l: int, m: int, x) -> float:
    """Associated Legendre function P_lm(x) with Condon-Shortley phase."""
    _check_lm(l, m)
    x = float(x)
    if abs(x) > 1.0:
        raise ValueError("legendre argument outside [-1, 1]")
    am = abs(m)
    val = legendre_table(l, x)[l, am] * math.sqrt(
        math.factorial(l + am) / math.factorial(l - am)
    )
    if m < 0:
        val *= (-1) ** am * math.factorial(l - am) / math.factorial(l + am)
    return float(val)


def lm_index(l: int, m: int) -> int:
    """Flat index of (l, m) in arrays of length (lmax+1)**2."""
    return l * l + l + m


def lm_pairs(lmax: int):
    """All (l, m) with l <= lmax, in flat-index order."""
    return [(l, m) for l in range(lmax + 1) for m in range(-l, l + 1)]


def sph_harm_table(lmax: int, theta, phi) -> np.ndarray:
    """Values ``Y[lm_index(l, m), ...]`` of all harmonics up to ``lmax``."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    theta, phi = np.broadcast_arrays(theta, phi)
    P = legendre_table(lmax, np.cos(theta))
    out = np.zeros(((lmax + 1) ** 2,) + theta.shape, dtype=complex)
    for l in range(lmax + 1):
        for m in range(0, l + 1):
            pos = P[l, m] * np.exp(1j * m * phi)
            out[lm_index(l, m)] = pos
            if m:
                out[lm_index(l, -m)] = (-1) ** m * np.conj(pos)
    return out


def sph_harm(l: int, m: int, theta, phi):
    """Racah-normalized spherical harmonic Y_lm(theta, phi)."""
    _check_lm(l, m)
    th = np.asarray(theta, dtype=float)
    if np.any((th < -1e-12) | (th > np.pi + 1e-12)):
        raise ValueError("theta outside [0, pi]")
    val = sph_harm_table(l, theta, phi)[lm_index(l, m)]
    return val if np.ndim(val) else complex(val)


# ---------------------------------------------------------------------------
# Wigner matrices


def spin_matrices(j):
    """Angular momentum matrices (J1, J2, J3) in the basis m = j, ..., -j."""
    tj = twice(j)
    jv = tj / 2
    m = jv - np.arange(tj + 1)
    # J+ |m> = sqrt(j(j+1) - m(m+1)) |m+1>; |m+1> sits one row above |m>
    jp = np.diag(np.sqrt(jv * (jv + 1) - m[1:] * (m[1:] + 1)), k=1).astype(complex)
    jm = jp.conj().T
    j1 = (jp + jm) / 2
    j2 = (jp - jm) / 2j
    j3 = np.diag(m).astype(complex)
    return j1, j2, j3


def wigner_small_d(j, m, k, beta: float) -> float:
    """Element d^j_{mk}(beta) of exp(-i beta Jy), by Wigner's sum formula."""
    tj, tm, tk = twice(j), twice(m), twice(k)
    if abs(tm) > tj or abs(tk) > tj or (tj + tm) % 2 or (tj + tk) % 2:
        raise ValueError("invalid magnetic quantum number")
    jp_m, jm_m = (tj + tm) // 2, (tj - tm) // 2
    jp_k, jm_k = (tj + tk) // 2, (tj - tk) // 2
    dmk = (tm - tk) // 2
    c = math.cos(beta / 2)
    s = math.sin(beta / 2)
    pref = math.sqrt(
        math.factorial(jp_m) * math.factorial(jm_m) * math.factorial(jp_k) * math.factorial(jm_k)
    )
    total = 0.0
    for n in range(max(0, -dmk), min(jp_k, jm_m) + 1):
        den = (
            math.factorial(jp_k - n)
            * math.factorial(n)
            * math.factorial(jm_m - n)
            * math.factorial(n + dmk)
        )
        total += (
            (-1) ** (n + dmk)
            / den
            * c ** (tj - 2 * n - dmk)
            * s ** (2 * n + dmk)
        )
    return pref * total


@lru_cache(maxsize=None)
def _jy_eigen(tj: int):
    _, j2, _ = spin_matrices(Fraction(tj, 2))
    w, v = np.linalg.eigh(j2)
    return w, v


def wigner_d_matrix(j, beta: float) -> np.ndarray:
    """Real matrix d^j(beta) = exp(-i beta Jy), rows/cols m = j..-j."""
    if beta == 0:
        return np.eye(twice(j) + 1)
    w, v = _jy_eigen(twice(j))
    d = (v * np.exp(-1j * beta * w)) @ v.conj().T
    return d.real


def wigner_D(j, alpha: float, beta: float, gamma: float) -> np.ndarray:
    """Unitary matrix D^j(alpha, beta, gamma), rows/cols m = j..-j."""
    tj = twice(j)
    m = tj / 2 - np.arange(tj + 1)
    d = wigner_d_matrix(j, beta)
    return np.exp(-1j * m * alpha)[:, None] * d * np.exp(-1j * m * gamma)[None, :]


def euler_to_matrix(alpha: float, beta: float, gamma: float) -> np.ndarray:
    """SO(3) rotation Rz(alpha) Ry(beta) Rz(gamma) (active convention)."""

    def rz(a):
        c, s = math.cos(a), math.sin(a)
        return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])

    c, s = math.cos(beta), math.sin(beta)
    ry = np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    return rz(alpha) @ ry @ rz(gamma)
