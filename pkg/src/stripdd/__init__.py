"""Homotopy-continuation solver and feasibility auditor for steady
drift-diffusion (Poisson-Nernst-Planck) systems on narrow strip domains."""

from .mesh import DomainSpec, Grid, build_grid, boundary_trace, lift_boundary
from .system import (
    BlockState,
    Coefficients,
    DualResidual,
    f_lambda,
    jacobian_apply,
    jacobian_assemble,
    norm_G,
    norm_H,
    residual,
)
from .linsolve import (
    ContractionReport,
    NonConvergence,
    SolverFailure,
    inv_laplacian,
    measure_inverse_norm,
    solve_contraction,
    solve_direct,
)
from .bounds import (
    BoundsReport,
    audit,
    check_bigr,
    compute_d0,
    compute_d0_proof,
    compute_r,
    estimate_lipschitz,
    feasibility_consistency,
    sup_f_mu_bound,
)
from .continuation import (
    CurvePoint,
    TraceConfig,
    TraceResult,
    check_nonnegativity,
    euler_predict,
    newton_correct,
    solve_lambda0,
    trace_curve,
)

__version__ = "0.1.0"
