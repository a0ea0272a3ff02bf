"""Explicit feasibility constants and the audit report.

Collects every computable constant of the theory: the width bound d0 (both
the printed formula and the coercivity-proof variant), a sampled Lipschitz
estimate C, the inverse bound M, the uniform parameter-derivative bound, and
the alpha0-parameterized (width, radius) selection together with the step
condition r >= max(C, M) * span * (1 + sup|F_mu|).
"""

import math
from dataclasses import dataclass, asdict
from fractions import Fraction

import numpy as np

from .mesh import Grid
from .system import (
    BlockState,
    Coefficients,
    f_lambda,
    jacobian_apply,
    norm_G,
    norm_H,
)

UNCONSTRAINED = math.inf


def compute_d0(coeffs: Coefficients):
    """Width bound from the explicit formula (printed-formula variant).

    d0^2 = 4 * min(d_n/c_n, d_p/c_p) / (|D|_inf + |a_u|_inf). Returns inf
    ("unconstrained") when the denominator vanishes.
    """
    denom = coeffs.D_inf + coeffs.a_u_inf
    if denom == 0.0:
        return UNCONSTRAINED
    ratio = min(coeffs.d_n / coeffs.c_n, coeffs.d_p / coeffs.c_p)
    return math.sqrt(4.0 * ratio / denom)


def compute_d0_proof(grid: Grid, coeffs: Coefficients):
    """Width bound using the coercivity-proof quantity |D + lap a_u|_inf.

    This differs in general from the printed formula's |D|_inf + |a_u|_inf;
    both are reported.
    """
    lap_au = -(grid.A @ coeffs.a_u)  # A is -Laplacian
    denom = float(np.max(np.abs(grid.restrict(coeffs.D) + lap_au)))
    # harmonic extensions have exactly-zero discrete Laplacian up to solver
    # roundoff; treat that as an unconstrained width too
    floor = 1e-9 * max(1.0, coeffs.D_inf, coeffs.a_u_inf / grid.spec.hy**2)
    if denom <= floor:
        return UNCONSTRAINED
    ratio = min(coeffs.d_n / coeffs.c_n, coeffs.d_p / coeffs.c_p)
    return math.sqrt(4.0 * ratio / denom)


def random_state_in_ball(grid: Grid, rng, R):
    """Random block state with H-norm at most R (uniform radius fraction)."""
    n = grid.n_interior
    h = BlockState(rng.standard_normal(n), rng.standard_normal(n), rng.standard_normal(n))
    nh = norm_H(grid, h)
    if nh == 0:
        return h
    return (R * rng.uniform(0.0, 1.0) / nh) * h


def estimate_lipschitz(grid: Grid, coeffs: Coefficients, R, samples, seed=0):
    """Sampled Lipschitz constant of F_h and F_lambda over the R-ball.

    For random pairs (v, lam), (w, mu) and unit directions hp, takes the max
    of |(F_h(v,lam) - F_h(w,mu)) hp|_G / dist and of the corresponding
    F_lambda difference quotient, with dist = (|v-w|_H^2 + (lam-mu)^2)^(1/2).
    Coincident pairs are skipped. Deterministic under a fixed seed. This is
    an empirical lower estimate of the true constant.
    """
    if samples < 2:
        raise ValueError("samples must be at least 2")
    rng = np.random.default_rng(seed)
    n = grid.n_interior
    best = 0.0
    for _ in range(samples):
        v = random_state_in_ball(grid, rng, R)
        w = random_state_in_ball(grid, rng, R)
        lam = rng.uniform(0.0, 1.0)
        mu = rng.uniform(0.0, 1.0)
        dist = math.sqrt(norm_H(grid, v - w) ** 2 + (lam - mu) ** 2)
        if dist == 0.0:
            continue
        hp = BlockState(rng.standard_normal(n), rng.standard_normal(n), rng.standard_normal(n))
        hp = (1.0 / norm_H(grid, hp)) * hp
        dj = jacobian_apply(grid, coeffs, v, lam, hp) - jacobian_apply(grid, coeffs, w, mu, hp)
        best = max(best, norm_G(grid, dj) / dist)
        dfl = f_lambda(grid, coeffs, v) - f_lambda(grid, coeffs, w)
        best = max(best, norm_G(grid, dfl) / dist)
    return best


def sup_f_mu_bound(a_n_norm, a_p_norm, d, R):
    """Uniform bound |F_lambda| <= |a_n|_L2 + |a_p|_L2 + (2d/sqrt(2)) R."""
    if d < 0 or R < 0:
        raise ValueError("d and R must be nonnegative")
    return a_n_norm + a_p_norm + (2.0 * d / math.sqrt(2.0)) * R


def compute_r(C, M, a_n_norm, a_p_norm, h0_norm, alpha0):
    """Width/radius selection for a given alpha0 in (0, 1].

    d = alpha0 / (2 sqrt(2) max(C, M)),
    r = max(C, M) (1 + |a_n| + |a_p|) / (1 - alpha0/2)
        + alpha0/(2 - alpha0) * |h0|_H.
    Returns (d_required, r).
    """
    if not 0.0 < alpha0 <= 1.0:
        raise ValueError("alpha0 must lie in (0, 1]")
    if C <= 0 or M <= 0:
        raise ValueError("C and M must be positive")
    kappa = max(C, M)
    d = alpha0 / (2.0 * math.sqrt(2.0) * kappa)
    r = kappa * (1.0 + a_n_norm + a_p_norm) / (1.0 - alpha0 / 2.0) + (
        alpha0 / (2.0 - alpha0)
    ) * h0_norm
    return d, r


def check_bigr(r, C, M, lambda_span, sup_f_mu):
    """Step condition: r >= max(C, M) * span * (1 + sup|F_mu|).

    Works on any exact numeric type (e.g. Fraction) as well as floats.
    """
    if not 0 < lambda_span <= 1:
        raise ValueError("lambda_span must lie in (0, 1]")
    return r >= max(C, M) * lambda_span * (1 + sup_f_mu)


def feasibility_consistency(C, M, a_n_norm, a_p_norm, h0_norm, alpha0, lambda_span=1):
    """Exact-arithmetic version of the compute_r / check_bigr consistency.

    Evaluates the selection and the step condition in rational arithmetic,
    using the cancellation 2d/sqrt(2) = alpha0 / (2 max(C, M)) so no
    irrational quantity enters. Returns (d_required, r, bigr_ok).
    """
    C = Fraction(C)
    M = Fraction(M)
    A = Fraction(a_n_norm) + Fraction(a_p_norm)
    h0 = Fraction(h0_norm)
    a0 = Fraction(alpha0)
    span = Fraction(lambda_span)
    if not 0 < a0 <= 1:
        raise ValueError("alpha0 must lie in (0, 1]")
    kappa = max(C, M)
    r = kappa * (1 + A) / (1 - a0 / 2) + a0 / (2 - a0) * h0
    R = r + h0
    t = a0 / (2 * kappa)  # = 2 d / sqrt(2) for the selected width
    sup = A + t * R
    ok = bool(check_bigr(r, C, M, span, sup))
    d = float(a0) / (2.0 * math.sqrt(2.0) * float(kappa))
    return d, float(r), ok


@dataclass
class BoundsReport:
    """All explicit constants plus the feasibility verdicts."""

    d0: float  # printed-formula width bound (inf = unconstrained)
    d0_proof: float  # coercivity-proof variant |D + lap a_u|_inf
    C_meas: float  # empirical lower estimate of the Lipschitz constant
    M: float
    sup_F_mu: float
    d_required: float
    r: float
    R: float
    h0_norm: float
    alpha0: float
    width: float
    contraction_factor: float
    contraction_width_ok: bool
    bigr_ok: bool
    width_ok: bool

    def all_ok(self):
        return self.width_ok and self.bigr_ok and self.contraction_width_ok

    def to_dict(self):
        return asdict(self)

    def recompute_flags(self):
        """Re-derive the verdict flags from the stored scalars.

        bigr is re-checked with one-ulp-scale slack: the stored values come
        from an exact rational evaluation and may sit exactly on equality.
        """
        rhs = max(self.C_meas, self.M) * (1.0 + self.sup_F_mu)
        return {
            "width_ok": self.width < self.d0,
            "bigr_ok": self.r >= rhs * (1.0 - 1e-12),
            "contraction_width_ok": self.contraction_factor < 0.5,
        }


def audit(grid: Grid, coeffs: Coefficients, alpha0=1.0, seed=0, samples=200, M=2.0):
    """Full feasibility audit for a problem instance.

    Measures C in two passes (a provisional unit ball fixes the radius, then
    the ball implied by the resulting r), runs the contraction probe at the
    lambda=0 center, and assembles the report.
    """
    from .continuation import solve_lambda0
    from .linsolve import NonConvergence, solve_contraction

    h0 = solve_lambda0(grid, coeffs, warn=False)
    h0_norm = norm_H(grid, h0)
    a_n_norm = grid.l2_norm_full(coeffs.a_n)
    a_p_norm = grid.l2_norm_full(coeffs.a_p)

    C1 = estimate_lipschitz(grid, coeffs, 1.0 + h0_norm, samples, seed=seed)
    _, r1 = compute_r(max(C1, M), M, a_n_norm, a_p_norm, h0_norm, alpha0)
    C_meas = estimate_lipschitz(grid, coeffs, h0_norm + r1, samples, seed=seed)

    d_required, r, bigr_ok = feasibility_consistency(
        max(C_meas, M), M, a_n_norm, a_p_norm, h0_norm, alpha0
    )
    R = r + h0_norm
    sup_F_mu = sup_f_mu_bound(a_n_norm, a_p_norm, d_required, R)

    d0 = compute_d0(coeffs)
    d0_proof = compute_d0_proof(grid, coeffs)
    width = grid.spec.width

    try:
        _, rep = solve_contraction(grid, coeffs, h0, 1.0, f_lambda(grid, coeffs, h0))
        factor = rep.contraction_factor
        contraction_ok = rep.converged and factor < 0.5
    except NonConvergence as exc:
        factor = exc.report.contraction_factor if exc.report else math.inf
        contraction_ok = False

    return BoundsReport(
        d0=d0,
        d0_proof=d0_proof,
        C_meas=C_meas,
        M=M,
        sup_F_mu=sup_F_mu,
        d_required=d_required,
        r=r,
        R=R,
        h0_norm=h0_norm,
        alpha0=alpha0,
        width=width,
        contraction_factor=factor,
        contraction_width_ok=contraction_ok,
        bigr_ok=bigr_ok,
        width_ok=width < d0,
    )
