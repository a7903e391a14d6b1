"""Nodewise assembly of the symmetric coefficient matrices.

Matrix fields have shape ``(n1, n2, 7, 7)`` with rows/columns ordered
``(q, v1, v2, v3, H1, H2, H3)``.
"""
from __future__ import annotations

import numpy as np

from .grid import diff
from .state import EXP_LAW, HyperbolicityError, NCOMP, StateField, q_to_p

IQ = 0
IV = slice(1, 4)
IH = slice(4, 7)


def _unpack(u, lam, law):
    u = np.asarray(u, dtype=float)
    H = u[4:7]
    p = q_to_p(u[0], H, lam)
    with np.errstate(invalid="ignore"):
        rho = law.rho(p)
        rho_p = law.rho_p(p)
    if not (np.all(rho > 0) and np.all(rho_p > 0)):
        raise HyperbolicityError("density or its derivative not positive")
    return p, rho, rho_p / rho, H / lam


def _data(state):
    if isinstance(state, StateField):
        return state.data, state.lam
    return np.asarray(state, dtype=float), None


def assemble_A0(state, lam=None, law=EXP_LAW):
    """A0 = [[a, 0, -a h^T], [0, rho I, 0], [-a h, 0, I + a h h^T]], a = rho_p/rho, h = H/lam."""
    u, lam0 = _data(state)
    lam = lam0 if lam is None else lam
    _, rho, a, h = _unpack(u, lam, law)
    shape = u.shape[1:]
    A = np.zeros(shape + (NCOMP, NCOMP))
    A[..., 0, 0] = a
    hT = np.moveaxis(h, 0, -1)
    A[..., 0, 4:7] = -a[..., None] * hT
    A[..., 4:7, 0] = -a[..., None] * hT
    eye = np.eye(3)
    A[..., 1:4, 1:4] = rho[..., None, None] * eye
    A[..., 4:7, 4:7] = eye + a[..., None, None] * hT[..., :, None] * hT[..., None, :]
    return A


def _coupling():
    E = np.zeros((NCOMP, NCOMP))
    E[1:4, 4:7] = np.eye(3)
    E[4:7, 1:4] = np.eye(3)
    return E


_E = _coupling()


def assemble_Aj(state, j, lam=None, law=EXP_LAW, A0=None):
    """lambda-free part of the j-th spatial coefficient: v_j A0 - H_j E."""
    if j not in (1, 2, 3):
        raise ValueError("j must be 1, 2 or 3")
    u, lam0 = _data(state)
    lam = lam0 if lam is None else lam
    if A0 is None:
        A0 = assemble_A0(u, lam, law)
    vj = u[j]
    Hj = u[3 + j]
    return vj[..., None, None] * A0 - Hj[..., None, None] * _E


def constant_Cj(j):
    if j not in (1, 2, 3):
        raise ValueError("j must be 1, 2 or 3")
    C = np.zeros((NCOMP, NCOMP))
    C[0, j] = C[j, 0] = 1.0
    return C


def dA0_dt(u, u_t, lam, law=EXP_LAW):
    """Chain-rule time derivative of A0 given u and its time derivative."""
    u = np.asarray(u, dtype=float)
    u_t = np.asarray(u_t, dtype=float)
    H, Ht = u[4:7], u_t[4:7]
    p = q_to_p(u[0], H, lam)
    p_t = u_t[0] / lam - np.sum(H * Ht, axis=0) / lam**2
    a = law.ratio(p)
    a_t = law.ratio_p(p) * p_t
    rho_t = law.rho_p(p) * p_t
    h = np.moveaxis(H / lam, 0, -1)
    h_t = np.moveaxis(Ht / lam, 0, -1)
    D = np.zeros(u.shape[1:] + (NCOMP, NCOMP))
    D[..., 0, 0] = a_t
    off = -(a_t[..., None] * h + a[..., None] * h_t)
    D[..., 0, 4:7] = off
    D[..., 4:7, 0] = off
    D[..., 1:4, 1:4] = rho_t[..., None, None] * np.eye(3)
    hh = h[..., :, None] * h[..., None, :]
    hht = h_t[..., :, None] * h[..., None, :]
    D[..., 4:7, 4:7] = a_t[..., None, None] * hh + a[..., None, None] * (hht + np.swapaxes(hht, -1, -2))
    return D


def _diff_matrix_field(M, axis, grid):
    F = np.moveaxis(M, (-2, -1), (0, 1))
    dF = diff(F, axis, grid)
    return np.moveaxis(dF, (0, 1), (-2, -1))


def div_A_bar(state, state_t, lam=None, grid=None, law=EXP_LAW):
    """dA0/dt + sum_j d_j A_j (d_3 vanishes in the 2.5-D setting).

    The time part is evaluated by the chain rule; the spatial part by
    differencing the assembled matrix fields with the one-sided wall stencils.
    """
    u, lam0 = _data(state)
    ut, _ = _data(state_t)
    lam = lam0 if lam is None else lam
    if grid is None:
        raise ValueError("grid required")
    A0 = assemble_A0(u, lam, law)
    out = dA0_dt(u, ut, lam, law)
    for j in (1, 2):
        out += _diff_matrix_field(assemble_Aj(u, j, lam, law, A0=A0), j, grid)
    return out


def full_coefficient(state, j, lam=None, law=EXP_LAW):
    """A_j + lam C_j."""
    u, lam0 = _data(state)
    lam = lam0 if lam is None else lam
    return assemble_Aj(u, j, lam, law) + lam * constant_Cj(j)
