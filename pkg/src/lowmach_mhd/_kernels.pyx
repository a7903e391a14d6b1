# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled nodewise flux kernel."""
import numpy as np
cimport numpy as cnp

cnp.import_array()

DEF N = 7
DEF POS_TOL = 1e-10


def flux_tendency(double[:, :, ::1] u, double[:, :, ::1] d1, double[:, :, ::1] d2,
                  double[:, ::1] rho, double[:, ::1] a, double lam):
    """Return ``-A0^{-1} sum_j (A_j + lam C_j) d_j u`` for j = 1, 2.

    ``u``, ``d1``, ``d2`` have shape (7, n1, n2); ``rho`` and ``a = rho_p/rho``
    have shape (n1, n2).
    """
    cdef Py_ssize_t n1 = u.shape[1], n2 = u.shape[2]
    cdef Py_ssize_t i, j
    cdef int k, m, bad = 0
    cdef Py_ssize_t bad_i = 0, bad_j = 0
    out_arr = np.empty((N, n1, n2), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef double r[N]
    cdef double h[3]
    cdef double vq, an, rh, v1, v2, H1, H2, inv_lam = 1.0 / lam
    cdef double Dq
    cdef double DH[3]
    with nogil:
        for i in range(n1):
            for j in range(n2):
                an = a[i, j]
                rh = rho[i, j]
                v1 = u[1, i, j]
                v2 = u[2, i, j]
                H1 = u[4, i, j]
                H2 = u[5, i, j]
                for k in range(3):
                    h[k] = u[4 + k, i, j] * inv_lam
                # advective derivatives (v . grad)
                Dq = v1 * d1[0, i, j] + v2 * d2[0, i, j]
                for k in range(3):
                    DH[k] = v1 * d1[4 + k, i, j] + v2 * d2[4 + k, i, j]
                vq = 0.0
                for k in range(3):
                    vq += h[k] * DH[k]
                r[0] = an * (Dq - vq) + lam * (d1[1, i, j] + d2[2, i, j])
                for k in range(3):
                    r[1 + k] = rh * (v1 * d1[1 + k, i, j] + v2 * d2[1 + k, i, j]) \
                        - (H1 * d1[4 + k, i, j] + H2 * d2[4 + k, i, j])
                r[1] += lam * d1[0, i, j]
                r[2] += lam * d2[0, i, j]
                for k in range(3):
                    vq = 0.0
                    for m in range(3):
                        vq += h[k] * h[m] * DH[m]
                    r[4 + k] = -an * h[k] * Dq - (H1 * d1[1 + k, i, j] + H2 * d2[1 + k, i, j]) \
                        + DH[k] + an * vq
                # closed-form A0 solve: the (q, H) block has Schur complement I
                if an < POS_TOL or rh < POS_TOL:
                    bad = 1
                    bad_i = i
                    bad_j = j
                    break
                for k in range(3):
                    r[1 + k] = r[1 + k] / rh
                    r[4 + k] = r[4 + k] + h[k] * r[0]
                r[0] = r[0] / an + h[0] * r[4] + h[1] * r[5] + h[2] * r[6]
                for k in range(N):
                    out[k, i, j] = -r[k]
            if bad:
                break
    if bad:
        from .state import HyperbolicityError
        raise HyperbolicityError(f"A0 not positive definite at node ({bad_i}, {bad_j})")
    return out_arr
