"""Neumann Poisson solves and the Helmholtz split ``v = P_S v + P_G v`` on the slab.

The discrete Laplacian is ``div o grad`` built from the same 4th-order
central first-derivative stencil the solver uses (with wall reflection in
x1 and periodic wrap in x2).  Under the reflection rules that composite
operator is diagonalised exactly by a type-I cosine transform in x1 and a
Fourier transform in x2, so the projections are exact to rounding:
``P_G`` is idempotent and orthogonal in the trapezoid inner product.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft

from .grid import STATE_PARITY, VECTOR_PARITY, diff


class PoissonError(RuntimeError):
    """Poisson solve failed (incompatible data or residual above tolerance)."""


def _symbol(theta, h):
    # Fourier symbol (divided by i) of the central 4th-order first derivative
    return (8.0 * np.sin(theta) - np.sin(2.0 * theta)) / (6.0 * h)


def laplacian_symbol(grid):
    """Eigenvalues of the discrete ``div grad`` on the cosine x Fourier basis, shape (n1, n2)."""
    j = np.arange(grid.n1)
    m = np.fft.fftfreq(grid.n2) * grid.n2
    k1 = _symbol(np.pi * j / (grid.n1 - 1), grid.dx1)
    k2 = _symbol(2.0 * np.pi * m / grid.n2, grid.dx2)
    return -(k1[:, None] ** 2 + k2[None, :] ** 2)


def _null_mask(grid):
    lap = laplacian_symbol(grid)
    return np.abs(lap) <= 1e-12 * np.max(np.abs(lap))


def grad(phi, grid):
    """Discrete gradient (components 1 and 2) of an even-parity scalar."""
    return np.stack([diff(phi, 1, grid, parity=STATE_PARITY[0]), diff(phi, 2, grid)])


def div(vec, grid):
    """Discrete divergence of ``(v1, v2)`` with ``v1`` odd at the walls."""
    return diff(vec[0], 1, grid, parity=STATE_PARITY[1]) + diff(vec[1], 2, grid)


def laplacian(phi, grid):
    return div(grad(phi, grid), grid)


def _forward(f):
    return fft.fft(fft.dct(f, type=1, axis=0), axis=1)


def _inverse(F):
    return fft.idct(fft.ifft(F, axis=1).real, type=1, axis=0)


@dataclass
class PoissonProblem:
    rhs: np.ndarray
    g0: float | np.ndarray = 0.0
    g1: float | np.ndarray = 0.0
    tol: float = 1e-9
    max_mismatch: float = 1e-6
    scale: float | None = None


def _lift(grid, g0, g1):
    """Smooth ``l`` with ``d1 l = g0`` at x1 = 0 and ``g1`` at x1 = L1, and its Laplacian."""
    x = grid.x1[:, None]
    L = grid.L1
    g0 = np.broadcast_to(np.asarray(g0, dtype=float), (grid.n2,))[None, :]
    g1 = np.broadcast_to(np.asarray(g1, dtype=float), (grid.n2,))[None, :]
    lift = g0 * (-((L - x) ** 2) / (2.0 * L)) + g1 * (x**2 / (2.0 * L))
    lap = (g1 - g0) / L + diff(diff(lift, 2, grid), 2, grid)
    return lift, lap


def solve_poisson_neumann(problem, grid):
    """Zero-mean ``phi`` with discrete ``div grad phi = rhs`` and ``d1 phi = g`` on the walls.

    Nonzero wall data are handled by subtracting a lifting profile; the
    remaining homogeneous problem is solved spectrally.  The compatible
    mean of the right-hand side is removed (the mean correction); a
    mismatch larger than ``max_mismatch`` relative to the data is an error.
    """
    rhs = np.asarray(problem.rhs, dtype=float)
    homog = np.all(np.asarray(problem.g0) == 0) and np.all(np.asarray(problem.g1) == 0)
    if homog:
        lift = 0.0
        f = rhs.copy()
    else:
        lift, lap_lift = _lift(grid, problem.g0, problem.g1)
        f = rhs - lap_lift
    F = _forward(f)
    null = _null_mask(grid)
    scale = problem.scale if problem.scale is not None else float(np.max(np.abs(f)))
    # null-space content expressed as a nodal amplitude
    mismatch = float(np.max(np.abs(F[null]))) / (2.0 * (grid.n1 - 1) * grid.n2)
    if mismatch > problem.max_mismatch * max(scale, 1e-300):
        raise PoissonError(f"Neumann data incompatible (null-space amplitude {mismatch:.2e})")
    lap = laplacian_symbol(grid)
    lap[null] = 1.0
    P = F / lap
    P[null] = 0.0
    phi = _inverse(P) + lift
    phi -= grid.integrate(phi) / (grid.L1 * grid.L2)
    if homog:
        res = laplacian(phi, grid) - _inverse(np.where(null, 0.0, F))
        if float(np.max(np.abs(res))) > problem.tol * max(scale, 1.0):
            raise PoissonError("Poisson residual above tolerance")
    return phi


def potential(vec, grid):
    """Zero-mean ``phi`` with ``grad phi = P_G vec`` (first two components)."""
    vec = np.asarray(vec, dtype=float)
    scale = float(np.max(np.abs(vec[:2]))) / min(grid.dx1, grid.dx2)
    return solve_poisson_neumann(PoissonProblem(div(vec[:2], grid), scale=scale), grid)


def project_G(vec, grid):
    """Gradient part of ``vec``; the x3 component (no x3 dependence) is left to P_S."""
    vec = np.asarray(vec, dtype=float)
    out = np.zeros_like(vec)
    out[:2] = grad(potential(vec, grid), grid)
    return out


def project_S(vec, grid):
    vec = np.asarray(vec, dtype=float)
    out = vec - project_G(vec, grid)
    out[0, 0] = out[0, -1] = 0.0
    return out


def inner(a, b, grid):
    """Trapezoid L2 inner product of vector fields."""
    return float(np.sum(grid.integrate(np.asarray(a) * np.asarray(b))))


__all__ = [
    "PoissonError",
    "PoissonProblem",
    "VECTOR_PARITY",
    "div",
    "grad",
    "inner",
    "laplacian",
    "laplacian_symbol",
    "potential",
    "project_G",
    "project_S",
    "solve_poisson_neumann",
]
