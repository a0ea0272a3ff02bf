"""Linear solvers for the linearized systems F_h(h, lam) h' = g.

Two routes: a direct sparse block factorization (production path) and the
constructive contraction iteration with inverse-Laplacian preconditioning,
which doubles as an empirical check that the domain width lies in the
contraction regime.
"""

from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import splu

from .mesh import Grid
from .system import (
    BlockState,
    Coefficients,
    DualResidual,
    check_lambda,
    convective_dual,
    norm_G,
    norm_H,
    physical_fields,
)


class SolverFailure(Exception):
    """Direct factorization or residual check failed."""


class NonConvergence(Exception):
    """Iteration did not reach tolerance; carries the diagnostics report."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


@dataclass
class ContractionReport:
    iterations: int
    contraction_factor: float
    inverse_norm_estimate: float
    converged: bool


def inv_laplacian(grid: Grid, g, kind="dual"):
    """Componentwise inverse Laplacian: the nodal field f with K f = <g, .>.

    kind="dual":  g is a dual vector; returns K^-1 g.
    kind="nodal": g is an L2 nodal field; returns K^-1 (M g), so that
                  inv_laplacian of the nodal -Laplacian of f recovers f.
    """
    g = np.asarray(g, dtype=float)
    if g.shape != (grid.n_interior,):
        raise ValueError("component length does not match grid interior size")
    if kind == "nodal":
        g = grid.cell_measure * g
    elif kind != "dual":
        raise ValueError(f"unknown kind {kind!r}")
    return grid.solve_K(g)


def solve_direct(J, g: DualResidual, grid: Grid) -> BlockState:
    """Sparse LU solve of the assembled block system J h' = g.

    Checks the raw algebraic residual to 1e-10 relative; failures surface as
    SolverFailure (singular factorizations occur outside the narrow-width
    regime and must not be masked).
    """
    rhs = g.to_flat()
    try:
        lu = splu(J.tocsc())
        sol = lu.solve(rhs)
    except RuntimeError as exc:
        raise SolverFailure(f"sparse factorization failed: {exc}") from exc
    if not np.all(np.isfinite(sol)):
        raise SolverFailure("direct solve produced non-finite values")
    defect = np.linalg.norm(J @ sol - rhs)
    if defect > 1e-10 * max(np.linalg.norm(rhs), 1e-300):
        raise SolverFailure(f"direct solve residual too large: {defect:.3e}")
    return BlockState.from_flat(sol)


def apply_T(grid: Grid, coeffs: Coefficients, h: BlockState, lam, hp: BlockState) -> BlockState:
    """Apply the inverse-Laplacian-preconditioned contraction operator."""
    lam = check_lambda(lam)
    u, n, p = physical_fields(grid, coeffs, h)
    meas = grid.cell_measure

    rho_f = grid.extend(hp.rho)
    sig_f = grid.extend(hp.sigma)
    tau_f = grid.extend(hp.tau)

    t1 = -lam * meas * grid.solve_K(hp.sigma - hp.tau)
    t2 = (coeffs.c_n / coeffs.d_n) * grid.solve_K(
        convective_dual(grid, sig_f, u) + convective_dual(grid, n, rho_f)
    )
    t3 = -(coeffs.c_p / coeffs.d_p) * grid.solve_K(
        convective_dual(grid, tau_f, u) + convective_dual(grid, p, rho_f)
    )
    return BlockState(t1, t2, t3)


def solve_contraction(
    grid: Grid,
    coeffs: Coefficients,
    h: BlockState,
    lam,
    g: DualResidual,
    tol=1e-10,
    maxit=200,
):
    """Fixed-point solve h' = T h' + b of F_h(h, lam) h' = g.

    b is the preconditioned right side (second and third components divided
    by d_n, d_p). Starts from zero; the contraction factor is the max of
    consecutive step-norm ratios after the first (warm-up) ratio.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if maxit < 1:
        raise ValueError("maxit must be at least 1")
    lam = check_lambda(lam)

    b = BlockState(
        grid.cell_measure * grid.solve_K(g.g1),
        grid.solve_K(g.g2) / coeffs.d_n,
        grid.solve_K(g.g3) / coeffs.d_p,
    )

    hk = BlockState.zeros(grid)
    prev_step = None
    factor = 0.0
    g_norm = norm_G(grid, g)
    for it in range(1, maxit + 1):
        hk1 = apply_T(grid, coeffs, h, lam, hk) + b
        step = norm_H(grid, hk1 - hk)
        if prev_step is not None and prev_step > 0:
            ratio = step / prev_step
            if it > 2:  # discard the warm-up ratio
                factor = max(factor, ratio)
            if ratio >= 1.0 and it > 2:
                report = ContractionReport(it, ratio, 0.0, False)
                raise NonConvergence(
                    f"contraction failed: step ratio {ratio:.3f} >= 1 "
                    "(width likely exceeds the contraction regime)",
                    report,
                )
        hk = hk1
        if step <= tol * max(norm_H(grid, hk), 1e-300):
            inv_est = norm_H(grid, hk) / g_norm if g_norm > 0 else 0.0
            return hk, ContractionReport(it, factor, inv_est, True)
        prev_step = step

    report = ContractionReport(maxit, factor, 0.0, False)
    raise NonConvergence(f"no convergence in {maxit} iterations", report)


def measure_inverse_norm(grid: Grid, coeffs: Coefficients, h: BlockState, lam, probes, seed=0):
    """Lower bound on |F_h^-1| as max of |h'|_H / |g|_G over random probes."""
    if probes < 1:
        raise ValueError("probes must be at least 1")
    from .system import jacobian_assemble

    rng = np.random.default_rng(seed)
    J = jacobian_assemble(grid, coeffs, h, lam)
    best = 0.0
    n = grid.n_interior
    for _ in range(probes):
        g = DualResidual(rng.standard_normal(n), rng.standard_normal(n), rng.standard_normal(n))
        gn = norm_G(grid, g)
        g = (1.0 / gn) * g
        hp = solve_direct(J, g, grid)
        best = max(best, norm_H(grid, hp))
    return best
