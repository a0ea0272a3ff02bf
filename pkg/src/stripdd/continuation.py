"""Homotopy driver: lambda=0 decoupled solve, Euler predictor, Newton
corrector, and per-point diagnostics (ball distance, nonnegativity)."""

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from .bounds import compute_d0
from .linsolve import NonConvergence, SolverFailure, solve_direct
from .mesh import Grid
from .system import (
    BlockState,
    Coefficients,
    DualResidual,
    _conv_matrix_in_weight,
    convective_dual,
    f_lambda,
    jacobian_assemble,
    norm_G,
    norm_H,
    physical_fields,
    residual,
)


@dataclass
class TraceConfig:
    steps: int = 10
    newton_tol: float = 1e-10
    newton_maxit: int = 25
    linear_solver: str = "direct"  # direct | contraction
    solver_tol: float = 1e-12
    solver_maxit: int = 400

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be at least 1")
        if self.newton_tol <= 0:
            raise ValueError("newton_tol must be positive")
        if self.linear_solver not in ("direct", "contraction"):
            raise ValueError(f"unknown linear_solver {self.linear_solver!r}")


@dataclass
class CurvePoint:
    lam: float
    state: BlockState
    residual_norm: float
    dist_to_h0: float
    newton_iters: int
    min_n: float
    min_p: float
    neg_part_norm_n: float
    neg_part_norm_p: float


@dataclass
class TraceResult:
    points: list
    failure: Optional[str] = None
    failed_lambda: Optional[float] = None

    @property
    def complete(self):
        return self.failure is None


def solve_lambda0(grid: Grid, coeffs: Coefficients, warn=True) -> BlockState:
    """Solve the decoupled lambda=0 system.

    rho from the Poisson equation -lap rho = D + lap a_u with homogeneous
    boundary values, then sigma and tau from the two linear
    advection-diffusion equations with the potential frozen at u = rho + a_u.
    """
    if warn:
        d0 = compute_d0(coeffs)
        if grid.spec.width >= d0:
            warnings.warn(
                f"domain width {grid.spec.width} is not below d0 = {d0:.4g}; "
                "the lambda=0 coercivity estimate is not guaranteed",
                stacklevel=2,
            )
    meas = grid.cell_measure

    # -lap u = D  =>  K rho = meas * (D - (-lap a_u))
    rhs_rho = meas * (grid.restrict(coeffs.D) - grid.A @ coeffs.a_u)
    rho = grid.solve_K(rhs_rho)
    u = grid.extend(rho) + coeffs.a_u

    E = sparse.csr_matrix(
        (np.ones(grid.n_interior), (grid.interior_idx, np.arange(grid.n_interior))),
        shape=(grid.n_nodes, grid.n_interior),
    )
    A_int = (grid.A @ E).tocsr()
    Cu = (_conv_matrix_in_weight(grid, u) @ E).tocsr()

    def carrier_solve(d_coef, c_coef, a_field, sign, which):
        # sign = -1 for the electron drift term, +1 for holes
        L = meas * d_coef * A_int + sign * c_coef * Cu
        rhs = -(
            meas * d_coef * (grid.A @ a_field)
            + sign * c_coef * convective_dual(grid, a_field, u)
        )
        try:
            lu = splu(L.tocsc())
            sol = lu.solve(rhs)
        except RuntimeError as exc:
            raise SolverFailure(
                f"lambda=0 linear solve failed for equation {which}: {exc}"
            ) from exc
        if not np.all(np.isfinite(sol)):
            raise SolverFailure(f"lambda=0 solve produced non-finite values (equation {which})")
        return sol

    sigma = carrier_solve(coeffs.d_n, coeffs.c_n, coeffs.a_n, -1.0, 2)
    tau = carrier_solve(coeffs.d_p, coeffs.c_p, coeffs.a_p, +1.0, 3)
    return BlockState(rho, sigma, tau)


def euler_predict(grid: Grid, coeffs: Coefficients, h: BlockState, lam, dlam) -> BlockState:
    """Tangent step: h + dlam * hdot where F_h hdot = -F_lambda."""
    if dlam < 0:
        raise ValueError("dlam must be nonnegative")
    if lam + dlam > 1.0 + 1e-12:
        raise ValueError("predictor step leaves the homotopy interval")
    if dlam == 0.0:
        return h.copy()
    J = jacobian_assemble(grid, coeffs, h, lam)
    hdot = solve_direct(J, f_lambda(grid, coeffs, h), grid)
    return h - dlam * hdot


def newton_correct(
    grid: Grid,
    coeffs: Coefficients,
    h_init: BlockState,
    lam,
    cfg: TraceConfig,
    residual_history=None,
):
    """Full Newton iteration on F(., lam) = 0 with the exact sparse Jacobian.

    Returns (state, iterations); acceptance is on the dual-norm residual.
    Pass a list as residual_history to collect the residual norms.
    """
    h = h_init.copy()
    for it in range(cfg.newton_maxit + 1):
        g = residual(grid, coeffs, h, lam)
        rn = norm_G(grid, g)
        if residual_history is not None:
            residual_history.append(rn)
        if rn <= cfg.newton_tol:
            return h, it
        if it == cfg.newton_maxit:
            raise NonConvergence(
                f"Newton did not converge at lambda={lam}: residual {rn:.3e} "
                f"after {it} iterations"
            )
        if cfg.linear_solver == "contraction":
            from .linsolve import solve_contraction

            step, _ = solve_contraction(
                grid, coeffs, h, lam, g, tol=cfg.solver_tol, maxit=cfg.solver_maxit
            )
        else:
            J = jacobian_assemble(grid, coeffs, h, lam)
            step = solve_direct(J, g, grid)
        h = h - step


def check_nonnegativity(grid: Grid, coeffs: Coefficients, state: BlockState):
    """Minimum nodal densities and the H10 energy of their negative parts."""
    _, n, p = physical_fields(grid, coeffs, state)
    n_neg = np.minimum(n, 0.0)
    p_neg = np.minimum(p, 0.0)
    return {
        "min_n": float(n.min()),
        "min_p": float(p.min()),
        "neg_part_norm_n": grid.h10_seminorm_full(n_neg),
        "neg_part_norm_p": grid.h10_seminorm_full(p_neg),
    }


def _make_point(grid, coeffs, h0, h, lam, iters):
    diag = check_nonnegativity(grid, coeffs, h)
    return CurvePoint(
        lam=lam,
        state=h,
        residual_norm=norm_G(grid, residual(grid, coeffs, h, lam)),
        dist_to_h0=norm_H(grid, h - h0),
        newton_iters=iters,
        **diag,
    )


def trace_curve(grid: Grid, coeffs: Coefficients, cfg: TraceConfig) -> TraceResult:
    """Trace the homotopy curve from lambda=0 to lambda=1.

    Uniform steps; each step is an Euler prediction followed by Newton
    correction. Aborts on the first corrector failure and returns the
    partial curve with the failure record.
    """
    h0 = solve_lambda0(grid, coeffs)
    h0_polished, it0 = newton_correct(grid, coeffs, h0, 0.0, cfg)
    points = [_make_point(grid, coeffs, h0_polished, h0_polished, 0.0, it0)]
    h = h0_polished

    for k in range(1, cfg.steps + 1):
        lam_prev = (k - 1) / cfg.steps
        lam = k / cfg.steps
        try:
            h_pred = euler_predict(grid, coeffs, h, lam_prev, lam - lam_prev)
            h, iters = newton_correct(grid, coeffs, h_pred, lam, cfg)
        except (NonConvergence, SolverFailure) as exc:
            return TraceResult(points, failure=str(exc), failed_lambda=lam)
        points.append(_make_point(grid, coeffs, h0_polished, h, lam, iters))
    return TraceResult(points)
