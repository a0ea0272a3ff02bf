"""Nonlinear residual, Jacobian, parameter derivative, and block norms.

State h = (rho, sigma, tau) holds the homogeneous-boundary corrections; the
physical fields are u = rho + a_u, n = sigma + a_n, p = tau + a_p. The
residual components are

    g1 = -lap u + lam*(n - p) - D            (nodal, L2 component)
    g2[phi] = int (d_n grad n - c_n n grad u) . grad phi
    g3[psi] = int (d_p grad p + c_p p grad u) . grad psi

with g2, g3 stored as dual vectors against the nodal test basis. All weak
pairings are assembled so the pure-diffusion parts coincide with the
stiffness matrix K; convective terms use centered gradients, so every term
is bilinear in its two field arguments and the Jacobian is exact.
"""

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .mesh import Grid


@dataclass
class Coefficients:
    """Transport constants, permanent charge, and boundary extensions.

    D, a_u, a_n, a_p are full nodal fields (the a_* are the lifted boundary
    data; D is sampled at every node).
    """

    d_n: float
    c_n: float
    d_p: float
    c_p: float
    D: np.ndarray
    a_u: np.ndarray
    a_n: np.ndarray
    a_p: np.ndarray

    def __post_init__(self):
        for name in ("d_n", "c_n", "d_p", "c_p"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        self.D = np.asarray(self.D, dtype=float)
        self.a_u = np.asarray(self.a_u, dtype=float)
        self.a_n = np.asarray(self.a_n, dtype=float)
        self.a_p = np.asarray(self.a_p, dtype=float)
        if not np.all(np.isfinite(self.D)):
            raise ValueError("permanent charge D must be finite at every node")

    @property
    def D_inf(self):
        return float(np.max(np.abs(self.D)))

    @property
    def a_u_inf(self):
        return float(np.max(np.abs(self.a_u)))


@dataclass
class BlockState:
    """Element of the discrete state space: three interior nodal fields."""

    rho: np.ndarray
    sigma: np.ndarray
    tau: np.ndarray

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=float)
        self.sigma = np.asarray(self.sigma, dtype=float)
        self.tau = np.asarray(self.tau, dtype=float)
        if not (self.rho.shape == self.sigma.shape == self.tau.shape):
            raise ValueError("state components must have equal length")

    @classmethod
    def zeros(cls, grid: Grid):
        n = grid.n_interior
        return cls(np.zeros(n), np.zeros(n), np.zeros(n))

    @classmethod
    def from_flat(cls, v):
        v = np.asarray(v, dtype=float)
        n = v.size // 3
        return cls(v[:n].copy(), v[n : 2 * n].copy(), v[2 * n :].copy())

    def to_flat(self):
        return np.concatenate([self.rho, self.sigma, self.tau])

    def copy(self):
        return BlockState(self.rho.copy(), self.sigma.copy(), self.tau.copy())

    def __add__(self, other):
        return BlockState(self.rho + other.rho, self.sigma + other.sigma, self.tau + other.tau)

    def __sub__(self, other):
        return BlockState(self.rho - other.rho, self.sigma - other.sigma, self.tau - other.tau)

    def __mul__(self, a):
        return BlockState(a * self.rho, a * self.sigma, a * self.tau)

    __rmul__ = __mul__


@dataclass
class DualResidual:
    """Element of the discrete dual space: (L2 field, two dual vectors)."""

    g1: np.ndarray
    g2: np.ndarray
    g3: np.ndarray

    def __post_init__(self):
        self.g1 = np.asarray(self.g1, dtype=float)
        self.g2 = np.asarray(self.g2, dtype=float)
        self.g3 = np.asarray(self.g3, dtype=float)

    @classmethod
    def zeros(cls, grid: Grid):
        n = grid.n_interior
        return cls(np.zeros(n), np.zeros(n), np.zeros(n))

    def to_flat(self):
        return np.concatenate([self.g1, self.g2, self.g3])

    @classmethod
    def from_flat(cls, v):
        v = np.asarray(v, dtype=float)
        n = v.size // 3
        return cls(v[:n].copy(), v[n : 2 * n].copy(), v[2 * n :].copy())

    def __add__(self, other):
        return DualResidual(self.g1 + other.g1, self.g2 + other.g2, self.g3 + other.g3)

    def __sub__(self, other):
        return DualResidual(self.g1 - other.g1, self.g2 - other.g2, self.g3 - other.g3)

    def __mul__(self, a):
        return DualResidual(a * self.g1, a * self.g2, a * self.g3)

    __rmul__ = __mul__


def check_lambda(lam):
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"homotopy parameter must lie in [0, 1], got {lam}")
    return float(lam)


def _check_dims(grid: Grid, h: BlockState):
    if h.rho.shape != (grid.n_interior,):
        raise ValueError(
            f"state length {h.rho.size} does not match grid interior size {grid.n_interior}"
        )


def convective_dual(grid: Grid, w_full, v_full):
    """Dual vector of the pairing int (w grad v) . grad phi over test nodes.

    Integrated by parts: equals -cell_measure * div_h(w grad_h v) at the
    interior nodes. Bilinear in (w, v).
    """
    gx = grid.Dx @ v_full
    gy = grid.Dy @ v_full
    div = grid.Dx @ (w_full * gx) + grid.Dy @ (w_full * gy)
    return -grid.cell_measure * grid.restrict(div)


def physical_fields(grid: Grid, coeffs: Coefficients, h: BlockState):
    """Full nodal (u, n, p) for a given correction state."""
    u = grid.extend(h.rho) + coeffs.a_u
    n = grid.extend(h.sigma) + coeffs.a_n
    p = grid.extend(h.tau) + coeffs.a_p
    return u, n, p


def residual(grid: Grid, coeffs: Coefficients, h: BlockState, lam) -> DualResidual:
    """Evaluate the homotopy residual F(h, lam)."""
    lam = check_lambda(lam)
    _check_dims(grid, h)
    u, n, p = physical_fields(grid, coeffs, h)
    meas = grid.cell_measure

    g1 = grid.A @ u + lam * (grid.restrict(n) - grid.restrict(p)) - grid.restrict(coeffs.D)
    g2 = meas * coeffs.d_n * (grid.A @ n) - coeffs.c_n * convective_dual(grid, n, u)
    g3 = meas * coeffs.d_p * (grid.A @ p) + coeffs.c_p * convective_dual(grid, p, u)
    return DualResidual(g1, g2, g3)


def jacobian_apply(
    grid: Grid, coeffs: Coefficients, h: BlockState, lam, hp: BlockState
) -> DualResidual:
    """Apply the state derivative F_h(h, lam) to a direction hp."""
    lam = check_lambda(lam)
    _check_dims(grid, h)
    _check_dims(grid, hp)
    u, n, p = physical_fields(grid, coeffs, h)
    meas = grid.cell_measure

    rho_f = grid.extend(hp.rho)
    sig_f = grid.extend(hp.sigma)
    tau_f = grid.extend(hp.tau)

    g1 = grid.A @ rho_f + lam * (hp.sigma - hp.tau)
    g2 = meas * coeffs.d_n * (grid.A @ sig_f) - coeffs.c_n * (
        convective_dual(grid, sig_f, u) + convective_dual(grid, n, rho_f)
    )
    g3 = meas * coeffs.d_p * (grid.A @ tau_f) + coeffs.c_p * (
        convective_dual(grid, tau_f, u) + convective_dual(grid, p, rho_f)
    )
    return DualResidual(g1, g2, g3)


def _conv_matrix_in_field(grid: Grid, w_full):
    """Matrix of v -> convective_dual(w, v) acting on full nodal v."""
    W = sparse.diags(w_full)
    op = grid.Dx @ W @ grid.Dx + grid.Dy @ W @ grid.Dy
    return -grid.cell_measure * op[grid.interior_idx, :]


def _conv_matrix_in_weight(grid: Grid, v_full):
    """Matrix of w -> convective_dual(w, v) acting on full nodal w."""
    gx = sparse.diags(grid.Dx @ v_full)
    gy = sparse.diags(grid.Dy @ v_full)
    op = grid.Dx @ gx + grid.Dy @ gy
    return -grid.cell_measure * op[grid.interior_idx, :]


def jacobian_assemble(grid: Grid, coeffs: Coefficients, h: BlockState, lam):
    """Assemble F_h(h, lam) as an explicit sparse 3x3-block matrix.

    Its action on flat vectors equals jacobian_apply on the corresponding
    BlockState.
    """
    lam = check_lambda(lam)
    _check_dims(grid, h)
    u, n, p = physical_fields(grid, coeffs, h)
    meas = grid.cell_measure

    E = sparse.csr_matrix(
        (np.ones(grid.n_interior), (grid.interior_idx, np.arange(grid.n_interior))),
        shape=(grid.n_nodes, grid.n_interior),
    )
    A_int = (grid.A @ E).tocsr()
    I = sparse.eye(grid.n_interior, format="csr")

    Cu = _conv_matrix_in_weight(grid, u) @ E  # sigma'/tau' in the weight slot
    Cn = _conv_matrix_in_field(grid, n) @ E  # rho' in the potential slot
    Cp = _conv_matrix_in_field(grid, p) @ E

    J11 = A_int
    J12 = lam * I
    J13 = -lam * I
    J21 = -coeffs.c_n * Cn
    J22 = meas * coeffs.d_n * A_int - coeffs.c_n * Cu
    J31 = coeffs.c_p * Cp
    J33 = meas * coeffs.d_p * A_int + coeffs.c_p * Cu
    return sparse.bmat(
        [[J11, J12, J13], [J21, J22, None], [J31, None, J33]], format="csr"
    )


def f_lambda(grid: Grid, coeffs: Coefficients, h: BlockState) -> DualResidual:
    """Parameter derivative F_lambda: ((n - p), 0, 0). Independent of lam."""
    _check_dims(grid, h)
    _, n, p = physical_fields(grid, coeffs, h)
    g1 = grid.restrict(n) - grid.restrict(p)
    z = np.zeros(grid.n_interior)
    return DualResidual(g1, z.copy(), z.copy())


def norm_H(grid: Grid, h: BlockState) -> float:
    """Block state norm: (|rho|_{H2}^2 + |sigma|_{H10}^2 + |tau|_{H10}^2)^(1/2).

    The first component uses the Laplacian norm |M^-1 K rho|_{L2}.
    """
    _check_dims(grid, h)
    lap_rho = grid.A @ grid.extend(h.rho)
    h2_sq = grid.cell_measure * float(lap_rho @ lap_rho)
    s_sq = float(h.sigma @ (grid.K @ h.sigma))
    t_sq = float(h.tau @ (grid.K @ h.tau))
    return float(np.sqrt(h2_sq + s_sq + t_sq))


def norm_G(grid: Grid, g: DualResidual) -> float:
    """Dual norm: (|g1|_{L2}^2 + |g2|_{H-1}^2 + |g3|_{H-1}^2)^(1/2).

    The H^-1 norms evaluate g^T K^-1 g via one stiffness solve each.
    """
    l2_sq = grid.cell_measure * float(g.g1 @ g.g1)
    h1m_sq = float(g.g2 @ grid.solve_K(g.g2)) + float(g.g3 @ grid.solve_K(g.g3))
    return float(np.sqrt(l2_sq + max(h1m_sq, 0.0)))
