"""Structured grid and discrete operators on a rectangular strip.

The domain is the open rectangle (0, L) x (0, d) with a uniform node-centered
grid. All operators use the standard 5-point stencil with Dirichlet rows
eliminated. Scaling convention: the stiffness matrix K is the cell-measure
scaled form, K = hx*hy * L_h with L_h the finite-difference -Laplacian, so
that v^T K v approximates the Dirichlet energy integral and K u ~ M (-lap u)
with the lumped mass M = hx*hy * I.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu


@dataclass(frozen=True)
class DomainSpec:
    """Rectangular strip (0, length) x (0, width)."""

    length: float
    width: float
    nx: int
    ny: int

    def __post_init__(self):
        if self.length <= 0 or self.width <= 0:
            raise ValueError("length and width must be positive")
        if self.nx < 2 or self.ny < 2:
            raise ValueError("nx and ny must be at least 2 (no interior nodes otherwise)")

    @property
    def hx(self):
        return self.length / self.nx

    @property
    def hy(self):
        return self.width / self.ny


@dataclass
class Grid:
    """Assembled grid: node layout plus the base discrete operators.

    Immutable after construction. Attributes:

    x, y           nodal coordinates, flat arrays of length n_nodes
    interior_idx   indices of interior nodes (sorted)
    boundary_idx   indices of boundary nodes (sorted)
    K              stiffness (n_int x n_int), SPD, cell-measure scaled
    M              lumped mass on interior nodes (diagonal, hx*hy)
    A              unscaled discrete -Laplacian, interior rows x all columns
    Dx, Dy         first derivatives on full nodal fields (centered interior,
                   second-order one-sided on the boundary)
    """

    spec: DomainSpec
    x: np.ndarray
    y: np.ndarray
    interior_idx: np.ndarray
    boundary_idx: np.ndarray
    K: sparse.csr_matrix
    M: sparse.dia_matrix
    A: sparse.csr_matrix
    Dx: sparse.csr_matrix
    Dy: sparse.csr_matrix
    _K_lu: object = field(default=None, repr=False)

    @property
    def n_nodes(self):
        return self.x.size

    @property
    def n_interior(self):
        return self.interior_idx.size

    @property
    def cell_measure(self):
        return self.spec.hx * self.spec.hy

    def solve_K(self, rhs):
        """Solve K v = rhs on interior nodes (cached sparse LU)."""
        return self._K_lu.solve(np.asarray(rhs, dtype=float))

    def extend(self, v_int):
        """Zero-extend an interior field to all nodes."""
        full = np.zeros(self.n_nodes)
        full[self.interior_idx] = v_int
        return full

    def restrict(self, v_full):
        """Restrict a full nodal field to interior nodes."""
        return np.asarray(v_full)[self.interior_idx]

    def quad_weights(self):
        """Trapezoid quadrature weights over all nodes (for full-field L2)."""
        nx, ny = self.spec.nx, self.spec.ny
        wx = np.ones(nx + 1)
        wx[[0, -1]] = 0.5
        wy = np.ones(ny + 1)
        wy[[0, -1]] = 0.5
        return self.cell_measure * np.outer(wy, wx).ravel()

    def l2_norm_full(self, v_full):
        """Trapezoid L2 norm of a field defined on all nodes."""
        return float(np.sqrt(np.sum(self.quad_weights() * np.asarray(v_full) ** 2)))

    def h10_seminorm_full(self, v_full):
        """Edge-difference energy seminorm of a full nodal field.

        Coincides with sqrt(v^T K v) when the boundary trace vanishes.
        """
        nx, ny = self.spec.nx, self.spec.ny
        hx, hy = self.spec.hx, self.spec.hy
        v = np.asarray(v_full).reshape(ny + 1, nx + 1)
        ex = np.diff(v, axis=1)
        ey = np.diff(v, axis=0)
        return float(np.sqrt((hy / hx) * np.sum(ex**2) + (hx / hy) * np.sum(ey**2)))


def _deriv_1d(n, h):
    """1D first-derivative matrix on n+1 nodes: centered interior, one-sided ends."""
    rows, cols, vals = [], [], []
    for i in range(1, n):
        rows += [i, i]
        cols += [i - 1, i + 1]
        vals += [-0.5 / h, 0.5 / h]
    rows += [0, 0, 0]
    cols += [0, 1, 2]
    vals += [-1.5 / h, 2.0 / h, -0.5 / h]
    rows += [n, n, n]
    cols += [n, n - 1, n - 2]
    vals += [1.5 / h, -2.0 / h, 0.5 / h]
    return sparse.coo_matrix((vals, (rows, cols)), shape=(n + 1, n + 1)).tocsr()


def build_grid(spec: DomainSpec) -> Grid:
    """Assemble the grid operators for a domain spec.

    Raises ValueError when nx < 2 or ny < 2 (DomainSpec enforces
    the same), since the 5-point stencil needs at least one interior node.
    """
    nx, ny = spec.nx, spec.ny
    hx, hy = spec.hx, spec.hy

    xi = np.linspace(0.0, spec.length, nx + 1)
    yj = np.linspace(0.0, spec.width, ny + 1)
    X, Y = np.meshgrid(xi, yj)
    x = X.ravel()
    y = Y.ravel()
    n_nodes = x.size

    ids = np.arange(n_nodes).reshape(ny + 1, nx + 1)
    interior_mask = np.zeros((ny + 1, nx + 1), dtype=bool)
    interior_mask[1:ny, 1:nx] = True
    interior_idx = ids[interior_mask]
    boundary_idx = ids[~interior_mask]

    # unscaled -Laplacian, one row per interior node, columns over all nodes
    ii, jj = np.meshgrid(np.arange(1, nx), np.arange(1, ny))
    ii = ii.ravel()
    jj = jj.ravel()
    n_int = ii.size
    rows = np.repeat(np.arange(n_int), 5)
    cols = np.stack(
        [
            ids[jj, ii],
            ids[jj, ii - 1],
            ids[jj, ii + 1],
            ids[jj - 1, ii],
            ids[jj + 1, ii],
        ],
        axis=1,
    ).ravel()
    vals = np.tile(
        [2.0 / hx**2 + 2.0 / hy**2, -1.0 / hx**2, -1.0 / hx**2, -1.0 / hy**2, -1.0 / hy**2],
        n_int,
    )
    A = sparse.coo_matrix((vals, (rows, cols)), shape=(n_int, n_nodes)).tocsr()

    K = (hx * hy) * A[:, interior_idx]
    K = K.tocsr()
    M = sparse.diags(np.full(n_int, hx * hy))

    Dx1 = _deriv_1d(nx, hx)
    Dy1 = _deriv_1d(ny, hy)
    Dx = sparse.kron(sparse.eye(ny + 1), Dx1).tocsr()
    Dy = sparse.kron(Dy1, sparse.eye(nx + 1)).tocsr()

    grid = Grid(
        spec=spec,
        x=x,
        y=y,
        interior_idx=interior_idx,
        boundary_idx=boundary_idx,
        K=K,
        M=M,
        A=A,
        Dx=Dx,
        Dy=Dy,
        _K_lu=splu(K.tocsc()),
    )
    return grid


def boundary_trace(grid: Grid, func) -> np.ndarray:
    """Sample func(x, y) on the boundary nodes (in grid.boundary_idx order)."""
    bx = grid.x[grid.boundary_idx]
    by = grid.y[grid.boundary_idx]
    return np.asarray(func(bx, by), dtype=float) * np.ones(bx.size)


def lift_boundary(grid: Grid, trace) -> np.ndarray:
    """Discrete harmonic extension of boundary samples into the interior.

    Returns a full nodal field that equals the trace exactly on boundary
    nodes; the interior solves the homogeneous 5-point Laplace equation.
    """
    trace = np.asarray(trace, dtype=float)
    if trace.shape != (grid.boundary_idx.size,):
        raise ValueError("trace must have one value per boundary node")
    full = np.zeros(grid.n_nodes)
    full[grid.boundary_idx] = trace
    rhs = -grid.cell_measure * (grid.A @ full)
    full[grid.interior_idx] = grid.solve_K(rhs)
    return full
