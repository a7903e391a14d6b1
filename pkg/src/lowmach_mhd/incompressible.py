"""Projection solver for the incompressible MHD limit system with wall conditions."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .compressible import BlowUpError, Trajectory, _output_times
from .grid import STATE_PARITY, ParityTable, diff, fourth_difference
from .helmholtz import grad, potential, project_S
from .state import EXP_LAW, law_from_tag

# parity of (w1, w2, w3, B1, B2, B3)
LIMIT_PARITY = ParityTable(STATE_PARITY.signs[1:])


@dataclass(frozen=True)
class LimitConfig:
    cfl: float = 0.8
    epsilon: float = 0.02
    T: float = 0.5
    output_dt: float | None = None
    eos: str = "exp"

    @property
    def law(self):
        return law_from_tag(self.eos)

    @property
    def dt_out(self):
        return self.output_dt if self.output_dt else self.T / 20.0


def _advect(a, b, grid, parity_b):
    """``(a . grad) b`` for 3-vectors ``a`` and ``b`` with per-component parities of ``b``."""
    out = np.empty_like(b)
    for i in range(3):
        out[i] = a[0] * diff(b[i], 1, grid, parity=parity_b[i]) + a[1] * diff(b[i], 2, grid)
    return out


def limit_speed(w, B, rho_bar=1.0):
    return float(np.max(np.sqrt(np.sum(w * w, axis=0)) + np.sqrt(np.sum(B * B, axis=0)) / np.sqrt(rho_bar)))


def _dissipation(f, grid, epsilon, s_max):
    if epsilon == 0:
        return np.zeros_like(f)
    d1, d2 = fourth_difference(f, grid, ParityTable(STATE_PARITY.signs[1:4]))
    return -epsilon * s_max * (d1 / grid.dx1 + d2 / grid.dx2)


def momentum_forcing(w, B, grid, rho_bar=1.0):
    """Unprojected ``-(w.grad) w + (B.grad) B / rho_bar``."""
    vp = STATE_PARITY.signs[1:4]
    return -_advect(w, w, grid, vp) + _advect(B, B, grid, vp) / rho_bar


def rhs_incompressible(u, grid, law=EXP_LAW, epsilon=0.0, s_max=None):
    """Tendency of the stacked ``(w, B)`` field, shape (6, n1, n2)."""
    u = np.asarray(u, dtype=float)
    w, B = u[0:3], u[3:6]
    rb = law.rho_bar
    vp = STATE_PARITY.signs[1:4]
    if s_max is None:
        s_max = limit_speed(w, B, rb)
    fw = momentum_forcing(w, B, grid, rb) + _dissipation(w, grid, epsilon, s_max)
    fB = -_advect(w, B, grid, vp) + _advect(B, w, grid, vp) + _dissipation(B, grid, epsilon, s_max)
    out = np.concatenate([project_S(fw, grid), fB])
    out[0, [0, -1]] = 0.0
    out[3, [0, -1]] = 0.0
    if not np.all(np.isfinite(out)):
        raise BlowUpError("non-finite tendency in limit solver", float("nan"))
    return out


def total_pressure(w, B, grid, law=EXP_LAW):
    """Zero-mean ``Pi = pi + |B|^2/2`` with ``grad Pi = P_G(-rho_bar (w.grad) w + (B.grad) B)``."""
    rb = law.rho_bar
    F = rb * momentum_forcing(np.asarray(w), np.asarray(B), grid, rb)
    return potential(F, grid)


def recover_total_pressure_gradient(u, grid, law=EXP_LAW):
    """``grad(pi + |B|^2/2)`` for the stacked ``(w, B)`` state; third component is 0."""
    u = np.asarray(u)
    Pi = total_pressure(u[0:3], u[3:6], grid, law)
    out = np.zeros((3,) + Pi.shape)
    out[:2] = grad(Pi, grid)
    return out


def project_state(u, grid):
    u = np.array(u, dtype=float, copy=True)
    u[0:3] = project_S(u[0:3], grid)
    u[3:6] = project_S(u[3:6], grid)
    return u


def step(u, dt, grid, law=EXP_LAW, epsilon=0.0):
    """SSP-RK3 step with both fields re-projected after every stage."""

    def L(x):
        return rhs_incompressible(x, grid, law, epsilon)

    u = np.asarray(u, dtype=float)
    u1 = project_state(u + dt * L(u), grid)
    u2 = project_state(0.75 * u + 0.25 * (u1 + dt * L(u1)), grid)
    return project_state(u / 3.0 + 2.0 / 3.0 * (u2 + dt * L(u2)), grid)


def stable_dt(u, grid, cfl=0.8, law=EXP_LAW):
    s = limit_speed(u[0:3], u[3:6], law.rho_bar)
    return cfl * min(grid.dx1, grid.dx2) / max(s, 1e-12)


def run(config, grid, w0, B0, max_dt=None):
    """Integrate from ``(P_S w0, P_S B0)``; outputs carry the total pressure in ``meta['pressure']``."""
    law = config.law
    u = project_state(np.concatenate([np.asarray(w0, dtype=float), np.asarray(B0, dtype=float)]), grid)
    traj = Trajectory(lam=1.0, grid=grid, meta={"config": config, "eos": law.tag, "pressure": []})
    traj.diagnostics = {"divw": [], "divB": []}
    from .helmholtz import div

    def store(t, u):
        rate = rhs_incompressible(u, grid, law, config.epsilon)
        traj.append(t, u, rate, divw=float(np.max(np.abs(div(u[0:2], grid)))), divB=float(np.max(np.abs(div(u[3:5], grid)))))
        traj.meta["pressure"].append(total_pressure(u[0:3], u[3:6], grid, law))

    t = 0.0
    store(t, u)
    outputs = _output_times(config.T, config.dt_out)
    for target in outputs[1:]:
        while t < target - 1e-12 * max(1.0, target):
            dt = stable_dt(u, grid, config.cfl, law)
            if max_dt is not None:
                dt = min(dt, max_dt)
            if t + dt >= target - 1e-12 * max(1.0, target):
                dt = target - t
                t_new = target
            else:
                t_new = t + dt
            u = step(u, dt, grid, law, config.epsilon)
            t = t_new
        store(t, u)
    return traj


def elsasser_state(grid, amp=0.1, mode=1, cutoff_order=5, rho_bar=1.0, sign=1.0):
    """Aligned pair ``w = sign * B / sqrt(rho_bar)`` built from one stream function."""
    from .state import DataFamily, make_initial_data

    fam = DataFamily(amp_H=amp, amp_v=0.0, modes_H=(mode,), cutoff_order=cutoff_order)
    s = make_initial_data(fam, grid, 1.0)
    B = s.H.copy()
    return np.concatenate([sign * B / np.sqrt(rho_bar), B])
