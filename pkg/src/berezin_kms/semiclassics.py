"""Large-j diagnostics: DGR defects, norm continuity, derivation limits and
convergence of quantum Gibbs moments to classical ones."""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .berezin import context
from .equilibrium import ClassicalGibbs, QuantumGibbs
from .lattice import (
    LatticeObservable,
    PotentialFamily,
    Region,
    derivation_classical,
    grid_sup,
    hamiltonian_quantum,
    operator_norm,
    poisson_bracket_region,
    quantize_region,
)


def _region_of(*obs) -> Region:
    r = obs[0].region
    for o in obs[1:]:
        r = r | o.region
    return r


def dgr_defect(j, a: LatticeObservable, b: LatticeObservable) -> float:
    """|| Q_j({a, b}) - i (2j+1) [Q_j(a), Q_j(b)] || (operator norm)."""
    ctx = context(j)
    region = _region_of(a, b)
    Qa = quantize_region(ctx, a, region)
    Qb = quantize_region(ctx, b, region)
    Qab = quantize_region(ctx, poisson_bracket_region(a, b), region)
    return operator_norm(Qab - 1j * ctx.dim * (Qa @ Qb - Qb @ Qa))


def norm_continuity_gap(j, a: LatticeObservable) -> float:
    """| ||Q_j(a)|| - ||a||_inf | with the sup norm estimated on a grid."""
    return abs(operator_norm(quantize_region(j, a)) - grid_sup(a))


def derivation_limit_defect(j, phi: PotentialFamily, a: LatticeObservable) -> float:
    """|| Q_j(delta_inf(a)) - i (2j+1) [Q_j(a), H_W] || on the range-closure window W.

    With delta_j = i[H, .] the commutator term equals -h_j^{-1} delta_j(Q_j(a));
    the relative sign is the one fixed by the DGR convention of :func:`dgr_defect`.
    """
    ctx = context(j)
    W = phi.range_closure(a.region)
    da = derivation_classical(phi, W, a)
    Qa = quantize_region(ctx, LatticeObservable(W, a.coeffs), W)
    H = hamiltonian_quantum(ctx, phi, W)
    return operator_norm(quantize_region(ctx, da, W) - 1j * ctx.dim * (Qa @ H - H @ Qa))


def gibbs_limit_gap(j, phi: PotentialFamily, region: Region, beta: float, a: LatticeObservable, degree: int = 48) -> float:
    """| omega_j(Q_j(a)) - omega_inf(a) | for the Gibbs states on ``region``."""
    aq = LatticeObservable(region, a.coeffs)
    wq = QuantumGibbs(j, phi, region, beta).expect(quantize_region(j, aq, region))
    wc = ClassicalGibbs(phi, region, beta, degree).expect(aq)
    return abs(wq - wc)


@dataclass
class ScanResult:
    js: list
    values: list
    slope: float | None
    residual: float | None
    identically_zero: bool = False

    def rows(self):
        return list(zip(self.js, self.values))


def scan(op, js, *args, zero_tol: float = 1e-14, **kwargs) -> ScanResult:
    """Evaluate ``op(j, *args, **kwargs)`` over ``js`` and fit value ~ (2j+1)^slope."""
    js = list(js)
    if len(js) < 3:
        raise ValueError("a scan needs at least three spins")
    vals = [float(op(j, *args, **kwargs)) for j in js]
    if all(abs(v) <= zero_tol for v in vals):
        return ScanResult(js, vals, None, None, identically_zero=True)
    x = np.log(2 * np.asarray(js, dtype=float) + 1)
    y = np.log(np.maximum(np.abs(vals), 1e-300))
    A = np.vstack([x, np.ones_like(x)]).T
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(math.sqrt(res[0] / len(js))) if res.size else 0.0
    return ScanResult(js, vals, float(coef[0]), resid)


def cartesian(site=(0,), region: Region | None = None):
    """The coordinate functions x1, x2, x3 at one site."""
    s2 = math.sqrt(2)
    region = Region([site]) if region is None else region
    x1 = LatticeObservable(region, {((site, 1, -1),): 1 / s2, ((site, 1, 1),): -1 / s2})
    x2 = LatticeObservable(region, {((site, 1, -1),): 1j / s2, ((site, 1, 1),): 1j / s2})
    x3 = LatticeObservable(region, {((site, 1, 0),): 1.0})
    return x1, x2, x3
