"""Linear acoustic system about rest: exact modal evolution and nonlinear forcing terms.

The system is ``dq/dt + lam mu1 div v = 0``, ``dv/dt + lam mu2 grad q = 0``
with ``v1 = 0`` on both walls.  q and v2 expand in cosines in x1, v1 in
sines, and everything in Fourier modes in x2.  With ``wavenumbers="discrete"``
the wavenumbers are those of the 4th-order central stencil, so the
evolution is exact for the semi-discrete operator used by the solver.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft

from .grid import diff
from .state import EXP_LAW, q_to_p


@dataclass(frozen=True)
class AcousticMode:
    k1: int
    k2: int
    amplitude: float = 1.0
    lam: float = 1.0
    mu1: float = 1.0
    mu2: float = 1.0

    def __post_init__(self):
        if self.k1 < 0:
            raise ValueError("normal index must be >= 0")
        if self.k1 == 0 and self.k2 == 0:
            raise ValueError("the (0, 0) mode does not oscillate")

    def wavevector(self, grid, wavenumbers="continuous"):
        t1 = np.pi * self.k1 / (grid.n1 - 1)
        t2 = 2.0 * np.pi * self.k2 / grid.n2
        if wavenumbers == "discrete":
            return _stencil_symbol(t1, grid.dx1), _stencil_symbol(t2, grid.dx2)
        return self.k1 * np.pi / grid.L1, 2.0 * np.pi * self.k2 / grid.L2

    def omega(self, grid, wavenumbers="continuous"):
        k1, k2 = self.wavevector(grid, wavenumbers)
        return self.lam * np.sqrt(self.mu1 * self.mu2) * np.hypot(k1, k2)


def _stencil_symbol(theta, h):
    return (8.0 * np.sin(theta) - np.sin(2.0 * theta)) / (6.0 * h)


def modal_solution(mode, t, grid, wavenumbers="continuous"):
    """Standing wave starting from a pure pressure profile; returns ``(q, v)`` with v of shape (3, n1, n2)."""
    X1, X2 = grid.mesh()
    c1, c2 = mode.k1 * np.pi / grid.L1, 2.0 * np.pi * mode.k2 / grid.L2
    k1, k2 = mode.wavevector(grid, wavenumbers)
    kk = np.hypot(k1, k2)
    w = mode.lam * np.sqrt(mode.mu1 * mode.mu2) * kk
    A = mode.amplitude
    s = np.sqrt(mode.mu2 / mode.mu1)
    q = A * np.cos(c1 * X1) * np.cos(c2 * X2) * np.cos(w * t)
    v = np.zeros((3,) + q.shape)
    v[0] = A * s * (k1 / kk) * np.sin(c1 * X1) * np.cos(c2 * X2) * np.sin(w * t)
    v[1] = A * s * (k2 / kk) * np.cos(c1 * X1) * np.sin(c2 * X2) * np.sin(w * t)
    return q, v


def _wavenumbers(grid, wavenumbers):
    j = np.arange(grid.n1)
    m = np.fft.fftfreq(grid.n2) * grid.n2
    t1 = np.pi * j / (grid.n1 - 1)
    t2 = 2.0 * np.pi * m / grid.n2
    if wavenumbers == "discrete":
        k1 = _stencil_symbol(t1, grid.dx1)
        k2 = _stencil_symbol(t2, grid.dx2)
    elif wavenumbers == "continuous":
        k1 = j * np.pi / grid.L1
        k2 = 2.0 * np.pi * m / grid.L2
        # the sine partner of a Nyquist cosine is not representable on the nodes
        k1[-1] = 0.0
        if grid.n2 % 2 == 0:
            k2[grid.n2 // 2] = 0.0
    else:
        raise ValueError(f"unknown wavenumber option {wavenumbers!r}")
    return np.broadcast_to(k1[:, None], (grid.n1, grid.n2)), np.broadcast_to(k2[None, :], (grid.n1, grid.n2))


def _to_modes(q, v):
    Q = fft.fft(fft.dct(q, type=1, axis=0), axis=1)
    V1 = np.zeros(q.shape, dtype=complex)
    V1[1:-1] = fft.fft(fft.dst(v[0][1:-1], type=1, axis=0), axis=1)
    V2 = fft.fft(fft.dct(v[1], type=1, axis=0), axis=1)
    return Q, V1, V2


def _from_modes(Q, V1, V2, n1):
    q = fft.idct(fft.ifft(Q, axis=1).real, type=1, axis=0)
    v1 = np.zeros_like(q)
    v1[1:-1] = fft.idst(fft.ifft(V1[1:-1], axis=1).real, type=1, axis=0)
    v2 = fft.idct(fft.ifft(V2, axis=1).real, type=1, axis=0)
    return q, v1, v2


def evolve(q0, v0, t, grid, lam, mu1=1.0, mu2=1.0, wavenumbers="discrete"):
    """Exact linear evolution of ``(q0, v0)`` to time ``t``."""
    q0 = np.asarray(q0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    if np.any(v0[0, 0] != 0) or np.any(v0[0, -1] != 0):
        raise ValueError("v1 must vanish on the walls")
    Q, V1, V2 = _to_modes(q0, v0)
    k1, k2 = _wavenumbers(grid, wavenumbers)
    kk = np.hypot(k1, k2)
    live = kk > 0
    kn = np.where(live, kk, 1.0)
    e1 = np.where(live, k1 / kn, 0.0)
    e2 = np.where(live, k2 / kn, 0.0)
    W = e1 * V1 + 1j * e2 * V2
    w = lam * np.sqrt(mu1 * mu2) * kk
    c, s = np.cos(w * t), np.sin(w * t)
    r = np.sqrt(mu1 / mu2)
    Qt = np.where(live, Q * c - r * W * s, Q)
    Wt = np.where(live, W * c + Q * s / r, W)
    dW = Wt - W
    V1t = V1 + dW * e1
    V2t = V2 - 1j * dW * e2
    # v1 has no sine partner at the outermost cosine index
    V1t[0] = V1t[-1] = 0.0
    q, v1, v2 = _from_modes(Qt, V1t, V2t, grid.n1)
    v = np.stack([v1, v2, v0[2].copy()])
    return q, v


def run_linear(q0, v0, lam, times, grid, mu1=1.0, mu2=1.0, wavenumbers="discrete"):
    """Exact modal evolution sampled at ``times``; returns a list of ``(t, q, v)``."""
    return [(float(t),) + evolve(q0, v0, t, grid, lam, mu1, mu2, wavenumbers) for t in times]


def local_energy(q, v, grid, subdomain=None, mu1=1.0, mu2=1.0):
    """``(1/2) int_K (q^2/mu1 + |v|^2/mu2)``."""
    dens = 0.5 * (np.asarray(q) ** 2 / mu1 + np.sum(np.asarray(v) ** 2, axis=0) / mu2)
    return float(grid.integrate(dens, subdomain))


def gradient_pulse(grid, center=(0.25, 0.5), radius=0.1, amplitude=1.0):
    """``v = grad phi`` for a compact C^4 bump ``phi``; q = 0."""
    X1, X2 = grid.mesh()
    # nearest periodic image in x2
    d2 = (X2 - center[1] + 0.5 * grid.L2) % grid.L2 - 0.5 * grid.L2
    d1 = X1 - center[0]
    r2 = (d1 * d1 + d2 * d2) / radius**2
    inside = r2 < 1.0
    b = np.where(inside, 1.0 - r2, 0.0)
    # phi = A (1 - r^2)^5, grad phi = -10 A (1 - r^2)^4 (d / radius^2)
    g = -10.0 * amplitude * b**4 / radius**2
    v = np.zeros((3, grid.n1, grid.n2))
    v[0] = g * d1
    v[1] = g * d2
    v[0, 0] = v[0, -1] = 0.0
    return np.zeros((grid.n1, grid.n2)), v


def residual_terms(state, state_t, grid, lam=None, law=EXP_LAW):
    """Nonlinear forcing ``(G0, G)`` of the acoustic form of the compressible system.

    ``G0 = mu1 {(abar - a) dq/dt - a [v.grad q - h.(dt + v.grad) H]}`` and
    ``G = mu2 {(rho_bar - rho) dv/dt - rho (v.grad) v + (H.grad) H}`` with
    ``a = rho_p/rho``, ``abar`` its rest value and ``h = H/lam``.
    """
    if state_t is None:
        raise ValueError("time derivative required")
    u = state.data if hasattr(state, "lam") else np.asarray(state)
    lam = state.lam if lam is None else lam
    ut = state_t.data if hasattr(state_t, "lam") else np.asarray(state_t)
    p = q_to_p(u[0], u[4:7], lam)
    rho = law.rho(p)
    a = law.ratio(p)
    abar = law.rho_p_bar / law.rho_bar
    v, H = u[1:4], u[4:7]

    def adv(b, f):
        return b[0] * diff(f, 1, grid) + b[1] * diff(f, 2, grid)

    DH = ut[4:7] + np.stack([adv(v, H[i]) for i in range(3)])
    G0 = law.mu1 * ((abar - a) * ut[0] - a * (adv(v, u[0]) - np.sum(H / lam * DH, axis=0)))
    G = np.stack([law.mu2 * ((law.rho_bar - rho) * ut[1 + i] - rho * adv(v, v[i]) + adv(H, H[i])) for i in range(3)])
    return G0, G


def linear_rhs(q, v, grid, lam, mu1=1.0, mu2=1.0):
    """Semi-discrete linear operator with the solver's wall-reflected stencils."""
    from .grid import STATE_PARITY

    dq = -lam * mu1 * (diff(v[0], 1, grid, parity=STATE_PARITY[1]) + diff(v[1], 2, grid))
    dv = np.zeros_like(v)
    dv[0] = -lam * mu2 * diff(q, 1, grid, parity=STATE_PARITY[0])
    dv[1] = -lam * mu2 * diff(q, 2, grid)
    dv[0, [0, -1]] = 0.0
    return dq, dv
