"""Berezin quantization of spin lattice systems and KMS-state numerics."""

__version__ = "0.1.0"

from .su2_special import (  # noqa: E402
    HalfInt,
    CGKey,
    assoc_legendre,
    sph_harm,
    clebsch_gordan,
    wigner_small_d,
    wigner_D,
    six_j,
)
from .sphere_calculus import (  # noqa: E402
    SphericalFunction,
    SphereQuadrature,
    quad_rule,
    analyze,
    synthesize,
    product,
    poisson_bracket,
    laplace_beltrami,
    spectral_sobolev_norm,
)
from .berezin import (  # noqa: E402
    SpinContext,
    context,
    coherent_state,
    quantize,
    quantize_by_quadrature,
    check_function,
    c_coeff,
    hs_inner,
    hs_basis,
    dequantize,
    hs_product_coeffs,
    rotate_operator,
    haar_rule,
)
from .lattice import (  # noqa: E402
    Region,
    LatticeObservable,
    PotentialFamily,
    Term,
    embed,
    quantize_region,
    poisson_bracket_region,
    hamiltonian_classical,
    hamiltonian_quantum,
    derivation_classical,
    derivation_quantum,
    lambda_norm,
)
from .equilibrium import (  # noqa: E402
    MomentVector,
    ClassicalGibbs,
    QuantumGibbs,
    gibbs_classical_moments,
    gibbs_quantum_state,
    evolve_imaginary,
    kms_residual_quantum,
    kms_residual_classical,
    autocorr_gap_classical,
    autocorr_gap_quantum,
    rotation_identity_residual,
)
from .semiclassics import (  # noqa: E402
    dgr_defect,
    norm_continuity_gap,
    derivation_limit_defect,
    gibbs_limit_gap,
    scan,
)
from .uniqueness import (  # noqa: E402
    Truncation,
    KSReport,
    k_s,
    c_delta,
    potential_norm,
    beta_classical,
    beta_quantum,
    ks_coefficient_classical,
    ks_apply_classical,
    ks_solve_classical,
    ks_apply_quantum,
    ks_solve_quantum,
    empirical_operator_norm,
)
