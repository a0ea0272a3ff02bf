import numpy as np
import pytest

from stripdd import (
    Coefficients,
    DomainSpec,
    boundary_trace,
    build_grid,
    lift_boundary,
)


def make_coeffs(grid, d_n=1.0, c_n=1.0, d_p=1.0, c_p=1.0, D=None, a_u=None, a_n=None, a_p=None):
    """Coefficients from trace callables (or constants) on a grid."""

    def lift(spec, default):
        if spec is None:
            spec = default
        if callable(spec):
            return lift_boundary(grid, boundary_trace(grid, spec))
        return lift_boundary(grid, np.full(grid.boundary_idx.size, float(spec)))

    if D is None:
        D_field = np.zeros(grid.n_nodes)
    elif callable(D):
        D_field = np.asarray(D(grid.x, grid.y), dtype=float) * np.ones(grid.n_nodes)
    else:
        D_field = np.full(grid.n_nodes, float(D))
    return Coefficients(
        d_n=d_n,
        c_n=c_n,
        d_p=d_p,
        c_p=c_p,
        D=D_field,
        a_u=lift(a_u, 0.0),
        a_n=lift(a_n, 0.0),
        a_p=lift(a_p, 0.0),
    )


def reference_instance(width=0.05, nx=64, ny=4, length=2.0):
    """The reference strip: unit coefficients, a_u = x/L, a_n = a_p = 1 + x/L."""
    grid = build_grid(DomainSpec(length, width, nx, ny))
    L = length
    coeffs = make_coeffs(
        grid,
        a_u=lambda x, y: x / L,
        a_n=lambda x, y: 1.0 + x / L,
        a_p=lambda x, y: 1.0 + x / L,
    )
    return grid, coeffs


@pytest.fixture
def ref_strip():
    return reference_instance()


@pytest.fixture
def unit_square_8():
    grid = build_grid(DomainSpec(1.0, 1.0, 8, 8))
    return grid


def random_state(grid, rng, scale=1.0):
    from stripdd import BlockState

    n = grid.n_interior
    return BlockState(
        scale * rng.standard_normal(n),
        scale * rng.standard_normal(n),
        scale * rng.standard_normal(n),
    )
