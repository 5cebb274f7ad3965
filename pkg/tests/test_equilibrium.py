import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from berezin_kms.berezin import context
from berezin_kms.equilibrium import (
    ClassicalGibbs,
    MomentVector,
    QuantumGibbs,
    autocorr_gap_classical,
    autocorr_gap_quantum,
    evolve_imaginary,
    gibbs_classical_moments,
    gibbs_quantum_state,
    kms_residual_classical,
    kms_residual_quantum,
    metropolis_moments,
    moment_keys,
    rotation_identity_residual,
)
from berezin_kms.lattice import (
    GuardError,
    LatticeObservable,
    PotentialFamily,
    Region,
    Term,
    poisson_bracket_region,
    single_site_potential,
)
from berezin_kms.sphere_calculus import SphericalFunction

from helpers import random_hermitian, random_observable
from test_lattice import bond_potential

seeds = st.integers(0, 2**32 - 1)
Y10 = SphericalFunction.harmonic(1, 0)
K10 = (((0,), 1, 0),)


def field(h=0.5):
    return single_site_potential(h * Y10)


def cos_moment(beta, h):
    # <cos> under exp(-beta h cos) d(cos)/2
    num = quad(lambda x: x * math.exp(-beta * h * x), -1, 1, epsabs=1e-15)[0]
    den = quad(lambda x: math.exp(-beta * h * x), -1, 1, epsabs=1e-15)[0]
    return num / den


# --- moment vectors --------------------------------------------------------


def test_moment_vector_rows():
    mv = MomentVector({(): 1.0, K10: 0.25 - 0.5j, (((0,), 1, 1), ((1,), 2, -1)): 2.0})
    assert mv[K10] == 0.25 - 0.5j
    assert mv.rows()[0] == ("", "", "", 1.0, 0.0)
    assert ("0;1", "1;2", "1;-1", 2.0, 0.0) in mv.rows()
    assert mv.sup_norm() == 2.0
    assert mv.distance(MomentVector({(): 1.0})) == 2.0
    assert len(moment_keys(Region.path(2), 1)) == 1 + 2 * 3 + 9


# --- classical Gibbs -------------------------------------------------------


def test_classical_beta_zero_is_poisson_trace():
    mv = gibbs_classical_moments(bond_potential(), Region.path(2), 0.0, 2, degree=8)
    assert mv[()] == 1
    assert max(abs(v) for k, v in mv.entries.items() if k) < 1e-14


def test_classical_single_site_oracle():
    for beta, h in [(1.0, 0.5), (0.3, 2.0), (2.0, 1.0)]:
        mv = gibbs_classical_moments(field(h), Region.path(1), beta, 2, degree=48, check=True)
        assert mv[K10].real == pytest.approx(cos_moment(beta, h), abs=1e-13)
        assert mv.flag is False
    # closed form coth(x) - 1/x with the minus sign from exp(-beta h cos)
    x = 0.5
    assert cos_moment(1.0, 0.5) == pytest.approx(-(1 / math.tanh(x) - 1 / x))


@given(seeds)
def test_classical_moments_hermitian_symmetry(seed):
    rng = np.random.default_rng(seed)
    phi = PotentialFamily([Term(Region.path(1), random_observable(rng, Region.path(1), 2, real=True))])
    mv = gibbs_classical_moments(phi, Region.path(1), 1.0, 2, degree=16)
    for l in (1, 2):
        for m in range(-l, l + 1):
            a = mv[(((0,), l, m),)]
            b = mv[(((0,), l, -m),)]
            assert a == pytest.approx((-1) ** m * np.conj(b), abs=1e-13)


def test_classical_guards():
    with pytest.raises(GuardError):
        ClassicalGibbs(field(), Region.path(4), 1.0, 4)
    with pytest.raises(ValueError):
        ClassicalGibbs(field(), Region.path(1), -1.0)


def test_metropolis_agrees_roughly():
    keys = [K10]
    mv = metropolis_moments(field(2.0), Region.path(1), 1.0, keys, n_steps=40000, seed=3)
    assert mv[K10].real == pytest.approx(cos_moment(1.0, 2.0), abs=0.05)


def test_classical_kms_trivial_and_convergence():
    omega = ClassicalGibbs(field(), Region.path(1), 1.0, 16)
    one = LatticeObservable.constant(Region.path(1))
    b = LatticeObservable.monomial(Region.path(1), [((0,), 1, -1)])
    assert kms_residual_classical(omega, one, b) == 0
    a = LatticeObservable.monomial(Region.path(1), [((0,), 1, 1)])
    res = [kms_residual_classical(ClassicalGibbs(field(), Region.path(1), 1.0, d), a, b) for d in (4, 8, 16)]
    assert res[1] < res[0] / 10 and res[2] < res[1] / 10
    omega0 = ClassicalGibbs(bond_potential(), Region.path(2), 0.0, 8)
    pb = poisson_bracket_region
    rng = np.random.default_rng(0)
    x, y = random_observable(rng, Region.path(2), 1), random_observable(rng, Region.path(2), 1)
    assert abs(omega0.expect(pb(x, y))) < 1e-13


def test_classical_autocorr_gap():
    rng = np.random.default_rng(5)
    r = Region.path(2)
    omega = ClassicalGibbs(bond_potential(), r, 0.7, 24)
    for _ in range(5):
        a = random_observable(rng, r, 1)
        assert abs(autocorr_gap_classical(omega, a)) < 1e-8
    # self-adjoint a: the bracket side vanishes and -i beta omega(a delta a) is zero for Gibbs
    a = random_observable(rng, r, 1, real=True)
    assert abs(autocorr_gap_classical(omega, a)) < 1e-8


def test_rotation_identity():
    rng = np.random.default_rng(11)
    a = random_observable(rng, Region.path(1), 2)
    assert rotation_identity_residual(field(), Region.path(1), 1.0, (0,), (0, 0, 0), a) == 0
    # phi invariant under rotations about z
    assert rotation_identity_residual(field(), Region.path(1), 1.0, (0,), (0.7, 0, 0.2), a, degree=24) < 1e-14
    e = rng.uniform(0, 2 * np.pi, 3)
    assert rotation_identity_residual(field(), Region.path(1), 0.0, (0,), e, a, degree=24) < 1e-13
    assert rotation_identity_residual(field(), Region.path(1), 1.0, (0,), e, a) < 1e-7
    b = random_observable(rng, Region.path(2), 1)
    assert rotation_identity_residual(bond_potential(), Region.path(2), 0.8, (1,), e, b, degree=24) < 1e-7


# --- quantum Gibbs -----------------------------------------------------------


def test_quantum_gibbs_basics():
    r = Region.path(2)
    g0 = QuantumGibbs(1, bond_potential(), r, 0.0)
    assert np.allclose(g0.rho, np.eye(9) / 9)
    g = gibbs_quantum_state(1, bond_potential(), r, 2.0)
    assert np.trace(g.rho).real == pytest.approx(1.0)
    assert np.min(np.linalg.eigvalsh(g.rho)) > -1e-15
    assert g.moment(()) == pytest.approx(1.0)


def test_quantum_qubit_closed_form():
    ctx = context(0.5)
    for beta, h in [(1.0, 1.0), (0.3, 2.5), (4.0, 0.7)]:
        g = QuantumGibbs(0.5, None, Region.path(1), beta, H=h * ctx.J3)
        assert g.expect(ctx.J3).real == pytest.approx(-0.5 * math.tanh(beta * h / 2), abs=1e-15)


def test_evolve_imaginary(rng):
    H = random_hermitian(rng, 5)
    B = rng.normal(size=(5, 5)) + 0j
    assert np.allclose(evolve_imaginary(2, H, B, 0.0), B)
    C = H @ H
    assert np.allclose(evolve_imaginary(2, H, C, 1.3), C)
    two = evolve_imaginary(2, H, evolve_imaginary(2, H, B, 0.4), 0.7)
    assert np.max(np.abs(two - evolve_imaginary(2, H, B, 1.1))) < 1e-10


@pytest.mark.parametrize("beta", [0.1, 1.0, 5.0])
def test_quantum_kms_exact(beta, rng):
    for j, n in [(1, 2), (1.5, 2), (2, 1), (1, 3)]:
        g = QuantumGibbs(j, bond_potential(), Region.path(n), beta)
        d = g.dim
        A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        B = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        scale = np.linalg.norm(A, 2) * np.linalg.norm(B, 2)
        assert kms_residual_quantum(g, A, B) < 1e-9 * scale
        assert kms_residual_quantum(g, np.eye(d), B) < 1e-12 * scale


def test_quantum_kms_fails_for_pure_state(rng):
    g = QuantumGibbs(1, bond_potential(), Region.path(2), 1.0)
    psi = rng.normal(size=9) + 1j * rng.normal(size=9)
    psi /= np.linalg.norm(psi)
    g.rho = np.outer(psi, psi.conj())
    A = rng.normal(size=(9, 9)) + 0j
    B = rng.normal(size=(9, 9)) + 0j
    assert kms_residual_quantum(g, A, B) > 1e-3


def test_quantum_autocorr_gap(rng):
    g = QuantumGibbs(1, bond_potential(), Region.path(2), 1.5)
    for _ in range(20):
        a = rng.normal(size=(9, 9)) + 1j * rng.normal(size=(9, 9))
        assert autocorr_gap_quantum(g, a) >= -1e-9
    # normal a commuting with H: both sides vanish
    f = g.vectors @ np.diag(rng.normal(size=9)) @ g.vectors.conj().T
    assert abs(autocorr_gap_quantum(g, f)) < 1e-12


def test_quantum_autocorr_gap_edge_cases():
    ctx = context(0.5)
    g = QuantumGibbs(0.5, None, Region.path(1), 1.0, H=ctx.J3)
    # rank-deficient probe state |up><up|
    g.rho = np.diag([1.0, 0.0]).astype(complex)
    lower = np.array([[0, 0], [1, 0]], dtype=complex)  # a*a = |up><up|, a a* = |down><down|
    assert autocorr_gap_quantum(g, lower) == -math.inf
    assert autocorr_gap_quantum(g, lower.conj().T) == pytest.approx(0.0)
