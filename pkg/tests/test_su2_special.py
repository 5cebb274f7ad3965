import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm
from scipy.special import lpmv
from sympy import S
from sympy.physics.wigner import clebsch_gordan as sym_cg
from sympy.physics.wigner import wigner_6j as sym_6j

from berezin_kms.su2_special import (
    CGKey,
    HalfInt,
    assoc_legendre,
    cg_key,
    clebsch_gordan,
    euler_to_matrix,
    lm_index,
    six_j,
    sph_harm,
    sph_harm_table,
    spin_matrices,
    wigner_D,
    wigner_d_matrix,
    wigner_small_d,
)


def halves(tmax):
    return [t / 2 for t in range(tmax + 1)]


def test_halfint():
    assert HalfInt.of(1.5).twice_value == 3
    assert HalfInt.of(2).is_integer
    with pytest.raises(ValueError):
        HalfInt.of(0.3)


# --- Legendre / harmonics -------------------------------------------------


def test_assoc_legendre_trivial():
    for x in [-1.0, -0.2, 0.0, 0.7, 1.0]:
        assert assoc_legendre(0, 0, x) == 1.0
    assert assoc_legendre(1, 0, 0.5) == pytest.approx(0.5, abs=1e-15)


def test_assoc_legendre_rodrigues():
    # (1-x^2)^{m/2} d^m/dx^m P_4(x) by finite differences, Condon-Shortley sign (-1)^m
    P4 = np.polynomial.legendre.Legendre.basis(4)
    x, h = 0.3, 1e-3
    d2 = (P4(x + h) - 2 * P4(x) + P4(x - h)) / h**2
    oracle = (1 - x * x) * d2
    assert assoc_legendre(4, 2, x) == pytest.approx(oracle, rel=1e-5)


@pytest.mark.parametrize("l", range(0, 9))
def test_assoc_legendre_vs_scipy(l):
    for m in range(-l, l + 1):
        for x in [-0.9, -0.3, 0.1, 0.65]:
            assert assoc_legendre(l, m, x) == pytest.approx(lpmv(m, l, x), rel=1e-11, abs=1e-13)


def test_assoc_legendre_domain():
    with pytest.raises(ValueError):
        assoc_legendre(2, 3, 0.1)
    with pytest.raises(ValueError):
        assoc_legendre(2, 1, 1.5)


def test_sph_harm_trivial():
    assert sph_harm(0, 0, 0.7, 2.1) == pytest.approx(1.0)
    th = np.linspace(0, np.pi, 7)
    assert np.allclose(sph_harm(1, 0, th, 0.3), np.cos(th))
    with pytest.raises(ValueError):
        sph_harm(1, 2, 0.1, 0.1)


def test_sph_harm_norm_quadrature():
    # mu0 is normalized to mass 1, so ||Y_lm||^2 = 1/(2l+1)
    from scipy.integrate import dblquad

    val, _ = dblquad(lambda t, p: abs(sph_harm(3, 2, t, p)) ** 2 * math.sin(t) / (4 * math.pi), 0, 2 * math.pi, 0, math.pi)
    assert val == pytest.approx(1 / 7, abs=1e-10)


def test_sph_harm_sup_bound(rng):
    th = rng.uniform(0, np.pi, 200)
    ph = rng.uniform(0, 2 * np.pi, 200)
    Y = sph_harm_table(10, th, ph)
    assert np.max(np.abs(Y)) <= 1 + 1e-12


def test_sph_harm_conjugation(rng):
    th = rng.uniform(0, np.pi, 32)
    ph = rng.uniform(0, 2 * np.pi, 32)
    Y = sph_harm_table(6, th, ph)
    for l in range(7):
        for m in range(-l, l + 1):
            assert np.allclose(np.conj(Y[lm_index(l, m)]), (-1) ** m * Y[lm_index(l, -m)], atol=1e-14)


def test_sph_harm_product_rule(rng):
    th = rng.uniform(0, np.pi, 64)
    ph = rng.uniform(0, 2 * np.pi, 64)
    Y = sph_harm_table(8, th, ph)
    for l1, m1, l2, m2 in [(1, 0, 1, 0), (2, 1, 3, -2), (3, 3, 2, -1), (4, -2, 4, 1)]:
        lhs = Y[lm_index(l1, m1)] * Y[lm_index(l2, m2)]
        rhs = 0
        M = m1 + m2
        for l in range(abs(l1 - l2), l1 + l2 + 1):
            if abs(M) > l:
                continue
            c = clebsch_gordan(l1, m1, l2, m2, l, M) * clebsch_gordan(l1, 0, l2, 0, l, 0)
            rhs = rhs + c * Y[lm_index(l, M)]
        assert np.max(np.abs(lhs - rhs)) < 1e-10


# --- Clebsch-Gordan -------------------------------------------------------


def test_cg_trivial():
    for j in halves(8):
        assert clebsch_gordan(0, 0, j, j, j, j) == pytest.approx(1.0)
    assert clebsch_gordan(1, 1, 1, 1, 1, 2) == 0.0


def test_cg_singlet_from_total_spin():
    # diagonalize J^2 on C^2 x C^2 and read the singlet overlap with |1/2, -1/2>
    J = spin_matrices(0.5)
    I = np.eye(2)
    tot = [np.kron(a, I) + np.kron(I, a) for a in J]
    J2 = sum(t @ t for t in tot)
    w, v = np.linalg.eigh(J2)
    singlet = v[:, np.argmin(w)]
    # fix the phase by Condon-Shortley: the <+,-> component is positive
    up_dn = np.kron([1, 0], [0, 1])
    singlet = singlet * np.sign((up_dn @ singlet).real)
    assert clebsch_gordan(0.5, 0.5, 0.5, -0.5, 0, 0) == pytest.approx((up_dn @ singlet).real, abs=1e-14)
    assert clebsch_gordan(0.5, -0.5, 0.5, 0.5, 0, 0) == pytest.approx(-1 / math.sqrt(2), abs=1e-15)


@pytest.mark.parametrize("t1,t2", [(1, 1), (2, 3), (4, 2), (5, 5), (6, 4)])
def test_cg_vs_sympy(t1, t2):
    for tj in range(abs(t1 - t2), t1 + t2 + 1, 2):
        for m1 in range(-t1, t1 + 1, 2):
            for m2 in range(-t2, t2 + 1, 2):
                if abs(m1 + m2) > tj:
                    continue
                ref = float(sym_cg(S(t1) / 2, S(t2) / 2, S(tj) / 2, S(m1) / 2, S(m2) / 2, S(m1 + m2) / 2))
                assert clebsch_gordan(t1 / 2, m1 / 2, t2 / 2, m2 / 2, tj / 2, (m1 + m2) / 2) == pytest.approx(ref, abs=1e-14)


def test_cg_key_and_selection():
    k = CGKey.of(1, 0, 1, 0, 2, 0)
    assert cg_key(k) == pytest.approx(math.sqrt(2 / 3))
    assert clebsch_gordan(1, 1, 1, 0, 2, 0) == 0.0  # m != m1 + m2
    assert clebsch_gordan(1, 0, 1, 0, 3, 0) == 0.0  # triangle
    with pytest.raises(ValueError):
        CGKey.of(1, 2, 1, 0, 1, 2)
    assert clebsch_gordan(1, 2, 1, 0, 1, 2) == 0.0


def test_cg_large_spin_is_finite():
    v = clebsch_gordan(40, 3, 45, -2, 50, 1)
    assert math.isfinite(v) and abs(v) < 1


def test_cg_orthogonality_up_to_six():
    worst = 0.0
    for t1 in range(13):
        for t2 in range(13):
            js = list(range(abs(t1 - t2), t1 + t2 + 1, 2))
            for M in range(-(t1 + t2), t1 + t2 + 1, 2):
                pairs = [(m1, M - m1) for m1 in range(-t1, t1 + 1, 2) if abs(M - m1) <= t2]
                rows = [tj for tj in js if abs(M) <= tj]
                C = np.array([[clebsch_gordan(t1 / 2, a / 2, t2 / 2, b / 2, tj / 2, M / 2) for a, b in pairs] for tj in rows])
                worst = max(worst, np.max(np.abs(C @ C.T - np.eye(len(rows)))))
    assert worst < 1e-12


@given(st.integers(0, 8), st.integers(0, 8), st.data())
def test_cg_symmetry_swap(t1, t2, data):
    tj = data.draw(st.sampled_from(range(abs(t1 - t2), t1 + t2 + 1, 2)))
    m1 = data.draw(st.sampled_from(range(-t1, t1 + 1, 2)))
    m2 = data.draw(st.sampled_from(range(-t2, t2 + 1, 2)))
    a = clebsch_gordan(t1 / 2, m1 / 2, t2 / 2, m2 / 2, tj / 2, (m1 + m2) / 2)
    b = clebsch_gordan(t2 / 2, m2 / 2, t1 / 2, m1 / 2, tj / 2, (m1 + m2) / 2)
    assert a == pytest.approx((-1) ** ((t1 + t2 - tj) // 2) * b, abs=1e-14)


# --- Wigner d / D ---------------------------------------------------------


def test_small_d_identity():
    for j in halves(8):
        n = int(2 * j) + 1
        ms = [j - i for i in range(n)]
        d = np.array([[wigner_small_d(j, m, k, 0.0) for k in ms] for m in ms])
        assert np.allclose(d, np.eye(n), atol=1e-15)


def test_small_d_low_spin_oracles():
    jy = np.array([[0, -0.5j], [0.5j, 0]])
    for th in [0.3, 1.7, 2.9]:
        assert wigner_small_d(0.5, 0.5, 0.5, th) == pytest.approx(expm(-1j * th * jy)[0, 0].real, abs=1e-15)
    _, Jy, _ = spin_matrices(1)
    assert wigner_small_d(1, 1, 0, math.pi / 2) == pytest.approx(expm(-1j * math.pi / 2 * Jy)[0, 1].real, abs=1e-15)
    assert wigner_small_d(1, 1, 0, math.pi / 2) == pytest.approx(-1 / math.sqrt(2), abs=1e-15)


@pytest.mark.parametrize("tj", range(0, 21))
def test_small_d_vs_expm(tj):
    j = tj / 2
    _, Jy, _ = spin_matrices(j)
    ms = [j - i for i in range(tj + 1)]
    for th in [0.4, 2.2]:
        ref = expm(-1j * th * Jy)
        d = np.array([[wigner_small_d(j, m, k, th) for k in ms] for m in ms])
        assert np.max(np.abs(d - ref)) < 1e-10
        assert np.max(np.abs(wigner_d_matrix(j, th) - ref)) < 1e-12


def test_wigner_D_identity_and_unitarity(rng):
    for tj in range(41):
        j = tj / 2
        assert np.allclose(wigner_D(j, 0, 0, 0), np.eye(tj + 1), atol=1e-14)
        a, b, c = rng.uniform(0, 2 * np.pi, 3)
        D = wigner_D(j, a, b, c)
        assert np.max(np.abs(D @ D.conj().T - np.eye(tj + 1))) < 1e-12


def test_wigner_D_column_is_conjugate_harmonic(rng):
    for l in range(6):
        th, ph = rng.uniform(0, np.pi), rng.uniform(0, 2 * np.pi)
        D = wigner_D(l, ph, th, 0.0)
        for i, m in enumerate(range(l, -l - 1, -1)):
            assert D[i, l] == pytest.approx(np.conj(sph_harm(l, m, th, ph)), abs=1e-13)


def test_wigner_D_is_representation(rng):
    # D(R1) D(R2) = D(R1 R2) up to the SU(2) sign, checked through the rotation matrices
    from scipy.spatial.transform import Rotation

    for j in [0.5, 1, 1.5, 3]:
        e1, e2 = rng.uniform(0, np.pi, 3), rng.uniform(0, np.pi, 3)
        R = euler_to_matrix(*e1) @ euler_to_matrix(*e2)
        a, b, c = Rotation.from_matrix(R).as_euler("ZYZ")
        lhs = wigner_D(j, *e1) @ wigner_D(j, *e2)
        rhs = wigner_D(j, a, b, c)
        assert min(np.max(np.abs(lhs - rhs)), np.max(np.abs(lhs + rhs))) < 1e-10


def test_euler_to_matrix_is_rotation(rng):
    R = euler_to_matrix(*rng.uniform(0, 3, 3))
    assert np.allclose(R @ R.T, np.eye(3))
    assert np.linalg.det(R) == pytest.approx(1.0)


# --- 6j -------------------------------------------------------------------


def test_six_j_triad_violation():
    assert six_j(1, 1, 3, 1, 1, 1) == 0.0
    assert six_j(0.5, 0.5, 0.5, 1, 1, 1) == 0.0


def six_j_from_cg(j1, j2, j3, j4, j5, j6):
    # {j1 j2 j3; j4 j5 j6} by contracting four CG coefficients (coupling recoupling overlap)
    # <(j1 j2) j3, j4; J | j1, (j2 j4) j6; J> = (-1)^{j1+j2+j4+J} sqrt((2j3+1)(2j6+1)) {j1 j2 j3; j4 J j6}
    J = j5
    M = J
    total = 0.0
    def ms(j):
        return [j - i for i in range(int(round(2 * j)) + 1)]
    for m1 in ms(j1):
        for m2 in ms(j2):
            m4 = M - m1 - m2
            if abs(m4) > j4 + 1e-9:
                continue
            m3 = m1 + m2
            m6 = m2 + m4
            if abs(m3) > j3 + 1e-9 or abs(m6) > j6 + 1e-9:
                continue
            a = clebsch_gordan(j1, m1, j2, m2, j3, m3) * clebsch_gordan(j3, m3, j4, m4, J, M)
            b = clebsch_gordan(j2, m2, j4, m4, j6, m6) * clebsch_gordan(j1, m1, j6, m6, J, M)
            total += a * b
    ph = (-1) ** int(round(j1 + j2 + j4 + J))
    return total * ph / math.sqrt((2 * j3 + 1) * (2 * j6 + 1))


@pytest.mark.parametrize(
    "args",
    [(1, 1, 1, 1, 1, 1), (0.5, 0.5, 1, 0.5, 0.5, 0), (1, 2, 2, 1.5, 1.5, 0.5), (2, 2, 2, 2, 2, 2), (1.5, 1, 0.5, 1, 1.5, 2)],
)
def test_six_j_vs_cg_contraction(args):
    assert six_j(*args) == pytest.approx(six_j_from_cg(*args), abs=1e-13)


def test_six_j_vs_sympy():
    for args in [(1, 2, 3, 2, 1, 2), (3, 3, 3, 3, 3, 3), (2.5, 2, 0.5, 1, 1.5, 2), (4, 4, 2, 2, 3, 4)]:
        ref = float(sym_6j(*[S(int(round(2 * a))) / 2 for a in args]))
        assert six_j(*args) == pytest.approx(ref, abs=1e-14)


@pytest.mark.parametrize("tj", [1, 2, 5, 8, 12])
def test_six_j_orthogonality(tj):
    # C_pq = sqrt((2p+1)(2q+1)) {j j p; j j q} is an orthogonal matrix (p, q = 0..2j)
    j = tj / 2
    n = tj + 1
    C = np.array([[math.sqrt((2 * p + 1) * (2 * q + 1)) * six_j(j, j, p, j, j, q) for q in range(n)] for p in range(n)])
    assert np.max(np.abs(C.T @ C - np.eye(n))) < 1e-12
