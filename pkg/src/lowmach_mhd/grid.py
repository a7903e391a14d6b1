"""Slab geometry, conormal weight and finite-difference operators.

The half-space ``x1 > 0`` is truncated to ``[0, L1]`` with a second
perfectly conducting wall at ``x1 = L1``; ``x2`` is periodic with period
``L2`` and nothing depends on ``x3``.  Nodes are wall-centred so the
boundary conditions sit exactly on grid nodes.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

GHOST = 2
MIN_N1 = 9
MIN_N2 = 4

# 4th-order central first derivative, offsets -2..2
_C4 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
# 4th-order one-sided first derivative rows for nodes 0 and 1
_ONESIDED = (
    np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0,
    np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0,
)


def sigma(x, L1):
    """Conormal weight: ``x`` near the wall, 1 far from it, C2 quintic blend between."""
    x = np.asarray(x, dtype=float)
    a, b = 0.25 * L1, 0.75 * L1
    h = b - a
    t = np.clip((x - a) / h, 0.0, 1.0)
    h0 = 1.0 - 10.0 * t**3 + 15.0 * t**4 - 6.0 * t**5
    h1 = 10.0 * t**3 - 15.0 * t**4 + 6.0 * t**5
    g0 = t - 6.0 * t**3 + 8.0 * t**4 - 3.0 * t**5
    blend = a * h0 + h1 + h * g0
    return np.where(x <= a, x, np.where(x >= b, 1.0, blend))


def sigma_prime(x, L1):
    x = np.asarray(x, dtype=float)
    a, b = 0.25 * L1, 0.75 * L1
    h = b - a
    t = np.clip((x - a) / h, 0.0, 1.0)
    dh0 = -30.0 * t**2 + 60.0 * t**3 - 30.0 * t**4
    dg0 = 1.0 - 18.0 * t**2 + 32.0 * t**3 - 15.0 * t**4
    blend = (a * dh0 - dh0) / h + dg0
    return np.where(x <= a, 1.0, np.where(x >= b, 0.0, blend))


@dataclass(frozen=True, eq=False)
class Grid:
    n1: int
    n2: int
    L1: float
    L2: float
    dx1: float
    dx2: float
    ghost: int
    x1: np.ndarray = field(repr=False)
    x2: np.ndarray = field(repr=False)
    sigma_values: np.ndarray = field(repr=False)

    @property
    def shape(self):
        return (self.n1, self.n2)

    @property
    def sigma_params(self):
        """Parameters pinning the conormal weight (recorded in checkpoints)."""
        return {"kind": "quintic-hermite", "linear_until": 0.25 * self.L1, "one_from": 0.75 * self.L1}

    def mesh(self):
        return np.meshgrid(self.x1, self.x2, indexing="ij")

    def trapezoid_weights(self, i0=0, i1=None):
        """Quadrature weights in x1 (trapezoid on nodes i0..i1 inclusive)."""
        i1 = self.n1 - 1 if i1 is None else i1
        w = np.zeros(self.n1)
        w[i0 : i1 + 1] = self.dx1
        w[i0] *= 0.5
        w[i1] *= 0.5
        return w

    def integrate(self, f, subdomain=None):
        """Integral over the slab (or a box ``((x1a, x1b), (x2a, x2b))``)."""
        w1, m2 = self.quadrature(subdomain)
        return np.einsum("...ij,i,j->...", f, w1, m2) * self.dx2

    def quadrature(self, subdomain=None):
        if subdomain is None:
            return self.trapezoid_weights(), np.ones(self.n2)
        (a1, b1), (a2, b2) = subdomain
        tol = 1e-9 * self.dx1
        idx = np.nonzero((self.x1 >= a1 - tol) & (self.x1 <= b1 + tol))[0]
        if idx.size < 2:
            raise ValueError("subdomain holds fewer than two x1 nodes")
        w1 = self.trapezoid_weights(idx[0], idx[-1])
        m2 = ((self.x2 >= a2 - 1e-9 * self.dx2) & (self.x2 <= b2 + 1e-9 * self.dx2)).astype(float)
        return w1, m2


def build_grid(n1, n2, L1=1.0, L2=1.0, ghost=GHOST):
    if n1 < MIN_N1:
        raise ValueError(f"n1 too small (need >= {MIN_N1}, got {n1})")
    if n2 < MIN_N2:
        raise ValueError(f"n2 too small (need >= {MIN_N2}, got {n2})")
    if not (L1 > 0 and L2 > 0):
        raise ValueError("domain lengths must be positive")
    if L1 > 2.0:
        # the blend overshoots 1 (sigma loses monotonicity) beyond this
        raise ValueError("L1 > 2 not supported by the conormal weight blend")
    if ghost < 2:
        raise ValueError("ghost width must be >= 2")
    x1 = np.linspace(0.0, L1, n1)
    x2 = np.arange(n2) * (L2 / n2)
    return Grid(
        n1=int(n1),
        n2=int(n2),
        L1=float(L1),
        L2=float(L2),
        dx1=L1 / (n1 - 1),
        dx2=L2 / n2,
        ghost=int(ghost),
        x1=x1,
        x2=x2,
        sigma_values=sigma(x1, L1),
    )


@dataclass(frozen=True)
class ParityTable:
    """Reflection parity (+1 even, -1 odd) of each component at both walls."""

    signs: tuple = (1, -1, 1, 1, -1, 1, 1)

    def __len__(self):
        return len(self.signs)

    def __getitem__(self, item):
        return self.signs[item]


STATE_PARITY = ParityTable()
VECTOR_PARITY = ParityTable((-1, 1, 1))


def _signs(parity, ncomp):
    if isinstance(parity, ParityTable):
        signs = np.asarray(parity.signs, dtype=float)
    else:
        signs = np.atleast_1d(np.asarray(parity, dtype=float))
    if signs.size == 1 and ncomp is None:
        return signs
    if ncomp is not None and signs.size != ncomp:
        raise ValueError("parity table does not match component count")
    return signs


def apply_ghost_fill(field, grid, parity):
    """Pad ``field`` in x1 with reflected ghost layers.

    ``field`` is ``(n1, n2)`` with a scalar parity or ``(c, n1, n2)`` with a
    ``c``-entry parity table.  Odd components are zeroed on both wall nodes.
    """
    f = np.asarray(field, dtype=float)
    scalar = f.ndim == 2
    if scalar:
        f = f[None]
    signs = _signs(parity, f.shape[0])
    if signs.size == 1:
        signs = np.repeat(signs, f.shape[0])
    g = grid.ghost
    n1 = f.shape[1]
    out = np.empty((f.shape[0], n1 + 2 * g, f.shape[2]))
    out[:, g : g + n1] = f
    odd = signs < 0
    out[odd, g] = 0.0
    out[odd, g + n1 - 1] = 0.0
    s = signs[:, None]
    for i in range(1, g + 1):
        out[:, g - i] = s * out[:, g + i]
        out[:, g + n1 - 1 + i] = s * out[:, g + n1 - 1 - i]
    return out[0] if scalar else out


def _central_x1(padded, g, h):
    n = padded.shape[-2] - 2 * g
    res = np.zeros(padded.shape[:-2] + (n, padded.shape[-1]))
    for off, c in zip(range(-2, 3), _C4):
        if c:
            res += c * padded[..., g + off : g + off + n, :]
    return res / h


def _onesided_x1(f, h):
    n = f.shape[-2]
    res = np.zeros_like(f)
    if n >= 5:
        pad = np.zeros(f.shape[:-2] + (n + 4, f.shape[-1]))
        pad[..., 2 : n + 2, :] = f
        for off, c in zip(range(-2, 3), _C4):
            if c:
                res[..., 2 : n - 2, :] += c * pad[..., 4 + off : n + off, :]
    for i, row in enumerate(_ONESIDED):
        res[..., i, :] = np.tensordot(row, f[..., 0:5, :], axes=([0], [f.ndim - 2]))
        res[..., n - 1 - i, :] = -np.tensordot(row, f[..., n - 1 : n - 6 : -1, :], axes=([0], [f.ndim - 2]))
    return res / h


def _wrap_x2(f, w=2):
    n = f.shape[-1]
    out = np.empty(f.shape[:-1] + (n + 2 * w,))
    out[..., w : w + n] = f
    out[..., :w] = f[..., n - w :]
    out[..., w + n :] = f[..., :w]
    return out


def _central_x2(f, h):
    n = f.shape[-1]
    p = _wrap_x2(f)
    return (p[..., 0:n] - 8.0 * p[..., 1 : n + 1] + 8.0 * p[..., 3 : n + 3] - p[..., 4 : n + 4]) / (12.0 * h)


def diff(field, axis, grid, parity=None):
    """4th-order first derivative along ``axis`` (1 or 2).

    Along x1 the stencil is central everywhere when ``parity`` is given
    (ghost layers by reflection, the solver path) and one-sided 4th order on
    the two nodes next to each wall otherwise (the norm path).  x2 is
    periodic.
    """
    f = np.asarray(field, dtype=float)
    if axis == 2:
        return _central_x2(f, grid.dx2)
    if axis != 1:
        raise ValueError("axis must be 1 or 2")
    if parity is None:
        return _onesided_x1(f, grid.dx1)
    padded = apply_ghost_fill(f, grid, parity)
    return _central_x1(padded, grid.ghost, grid.dx1)


def fourth_difference(field, grid, parity):
    """Undivided 4th differences ``(d1^4 f, d2^4 f)`` with reflected ghosts in x1."""
    f = np.asarray(field, dtype=float)
    padded = apply_ghost_fill(f, grid, parity)
    g, n = grid.ghost, f.shape[-2]
    c = (1.0, -4.0, 6.0, -4.0, 1.0)
    d1 = sum(ci * padded[..., g + off : g + off + n, :] for off, ci in zip(range(-2, 3), c))
    m = f.shape[-1]
    p = _wrap_x2(f)
    d2 = sum(ci * p[..., 2 + off : 2 + off + m] for off, ci in zip(range(-2, 3), c))
    return d1, d2


def conormal_diff(field, alpha, k, grid, max_order=4):
    """Apply ``(sigma d1)^a1 d2^a2 d3^a3 d1^k`` (rightmost factor first).

    Fields carry no x3 dependence, so any ``a3 > 0`` gives zero.  One-sided
    wall stencils are used, so no parity information is needed.
    """
    alpha = tuple(alpha) + (0,) * (3 - len(alpha))
    order = sum(alpha) + 2 * k
    if order > max_order:
        raise ValueError(f"operator order {order} exceeds maximum {max_order}")
    f = np.asarray(field, dtype=float)
    if alpha[2] > 0:
        return np.zeros_like(f)
    for _ in range(k):
        f = diff(f, 1, grid)
    for _ in range(alpha[1]):
        f = diff(f, 2, grid)
    s = grid.sigma_values[:, None]
    for _ in range(alpha[0]):
        f = s * diff(f, 1, grid)
    return f
