"""Pure-numpy fallback for the nodewise flux kernel (same algorithm, vectorised over nodes)."""
from __future__ import annotations

import numpy as np

from .state import HyperbolicityError

N = 7
POS_TOL = 1e-10


def flux_tendency(u, d1, d2, rho, a, lam):
    """Return ``-A0^{-1} sum_j (A_j + lam C_j) d_j u`` for j = 1, 2."""
    shape = u.shape[1:]
    M = int(np.prod(shape))
    u = u.reshape(N, M)
    d1 = d1.reshape(N, M)
    d2 = d2.reshape(N, M)
    rho = rho.reshape(M)
    a = a.reshape(M)
    v1, v2, H1, H2 = u[1], u[2], u[4], u[5]
    h = u[4:7] / lam
    Dq = v1 * d1[0] + v2 * d2[0]
    DH = v1 * d1[4:7] + v2 * d2[4:7]
    hDH = np.sum(h * DH, axis=0)
    r = np.empty((N, M))
    r[0] = a * (Dq - hDH) + lam * (d1[1] + d2[2])
    r[1:4] = rho * (v1 * d1[1:4] + v2 * d2[1:4]) - (H1 * d1[4:7] + H2 * d2[4:7])
    r[1] += lam * d1[0]
    r[2] += lam * d2[0]
    r[4:7] = -a * h * Dq - (H1 * d1[1:4] + H2 * d2[1:4]) + DH + a * h * hDH
    bad = (a < POS_TOL) | (rho < POS_TOL)
    if np.any(bad):
        raise HyperbolicityError(f"A0 not positive definite at flat node {int(np.argmax(bad))}")
    # closed-form A0 solve: the (q, H) block has Schur complement I
    x = np.empty_like(r)
    x[1:4] = r[1:4] / rho
    x[4:7] = r[4:7] + h * r[0]
    x[0] = r[0] / a + np.sum(h * x[4:7], axis=0)
    return -x.reshape((N,) + shape)
