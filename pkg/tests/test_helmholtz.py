import numpy as np
import pytest

from lowmach_mhd import build_grid
from lowmach_mhd.helmholtz import (
    PoissonError,
    PoissonProblem,
    div,
    grad,
    inner,
    laplacian,
    laplacian_symbol,
    project_G,
    project_S,
    solve_poisson_neumann,
)

from conftest import smooth_vector


def test_symbol_diagonalises_operator(grid):
    # a single cosine x Fourier mode is an exact eigenfunction of div grad
    j, m = 3, 2
    phi = np.cos(np.pi * j * np.arange(grid.n1) / (grid.n1 - 1))[:, None] * np.cos(2 * np.pi * m * np.arange(grid.n2) / grid.n2)[None, :]
    lam = laplacian_symbol(grid)[j, m]
    assert np.max(np.abs(laplacian(phi, grid) - lam * phi)) < 1e-10 * abs(lam)


def test_projections_exact(grid, rng):
    v = smooth_vector(rng, grid)
    v[:2] += grad(np.cos(np.pi * grid.mesh()[0]) * np.sin(2 * np.pi * grid.mesh()[1]), grid)
    g = project_G(v, grid)
    s = project_S(v, grid)
    scale = inner(v, v, grid)
    assert np.max(np.abs(div(s[:2], grid))) < 1e-10
    assert np.max(np.abs(project_G(g, grid) - g)) < 1e-12
    assert np.max(np.abs(g + s - v)) < 1e-12
    assert abs(inner(g, s, grid)) < 1e-12 * scale
    assert np.all(s[0, [0, -1]] == 0)
    assert np.array_equal(s[2], v[2])


def _manufactured(n, g0=0.0, g1=0.0):
    g = build_grid(n, n - 1)
    X1, X2 = g.mesh()
    k = np.pi
    phi = np.cos(k * X1) * np.cos(2 * np.pi * X2)
    rhs = -(k**2 + 4 * np.pi**2) * phi
    if g0 or g1:
        # add a profile with the requested wall slopes
        L = g.L1
        phi = phi + g0 * (-((L - X1) ** 2) / (2 * L)) + g1 * X1**2 / (2 * L)
        rhs = rhs + (g1 - g0) / L
    phi -= g.integrate(phi) / (g.L1 * g.L2)
    sol = solve_poisson_neumann(PoissonProblem(rhs, g0, g1, tol=1e-6), g)
    return np.max(np.abs(sol - phi))


@pytest.mark.parametrize("wall", [(0.0, 0.0), (0.3, -0.2)])
def test_manufactured_poisson_fourth_order(wall):
    e = np.array([_manufactured(n, *wall) for n in (17, 33, 65)])
    orders = np.log2(e[:-1] / e[1:])
    assert np.all(orders > 3.8), orders


def test_incompatible_data_rejected(grid):
    rhs = np.ones(grid.shape)
    with pytest.raises(PoissonError):
        solve_poisson_neumann(PoissonProblem(rhs), grid)
