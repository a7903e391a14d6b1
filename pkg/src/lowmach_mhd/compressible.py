"""Explicit solver for the symmetric compressible system with perfectly conducting walls."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .flux import assemble_A0, div_A_bar
from .grid import STATE_PARITY, apply_ghost_fill, diff, fourth_difference
from .helmholtz import div as discrete_div
from .helmholtz import grad as grad_op
from .helmholtz import laplacian as laplacian_op
from .helmholtz import project_S
from .state import (
    EXP_LAW,
    P_MAX,
    HyperbolicityError,
    StateField,
    law_from_tag,
    q_to_p,
)


class BlowUpError(HyperbolicityError):
    """Run aborted; carries the failure time and the trajectory up to it."""

    def __init__(self, msg, time, trajectory=None):
        super().__init__(msg)
        self.time = time
        self.trajectory = trajectory


@dataclass(frozen=True)
class SolverConfig:
    lam: float
    cfl: float = 0.8
    epsilon: float = 0.02
    T: float = 0.5
    clean_every: int = 10
    output_dt: float | None = None
    p_max: float = P_MAX
    eos: str = "exp"
    clean_outputs: bool = True
    energy_diagnostics: bool = True
    max_steps: int = 10_000_000
    dissipation: str = "uniform"

    def __post_init__(self):
        if self.lam < 1:
            raise ValueError("lambda must be >= 1")
        if not 0 < self.cfl <= 1:
            raise ValueError("cfl must lie in (0, 1]")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.T < 0:
            raise ValueError("T must be >= 0")
        if self.clean_every < 0:
            raise ValueError("clean_every must be >= 0")
        if self.dissipation not in DISSIPATION_MODES:
            raise ValueError(f"unknown dissipation mode {self.dissipation!r}")

    @property
    def law(self):
        return law_from_tag(self.eos)

    @property
    def dt_out(self):
        return self.output_dt if self.output_dt else self.T / 20.0


@dataclass
class Trajectory:
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    rates: list = field(default_factory=list)
    lam: float = 1.0
    grid: object = None
    meta: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=lambda: {"divH": [], "energy_residual": [], "p_max": []})

    def append(self, t, u, rate, **diag):
        if self.times and t <= self.times[-1]:
            raise ValueError("trajectory times must increase strictly")
        self.times.append(float(t))
        self.states.append(np.array(u, dtype=float, copy=True))
        self.rates.append(None if rate is None else np.array(rate, dtype=float, copy=True))
        for k in self.diagnostics:
            self.diagnostics[k].append(diag.get(k, float("nan")))

    def __len__(self):
        return len(self.times)

    def state(self, i):
        return StateField(self.states[i], self.lam)

    def index_of(self, t, tol=1e-9):
        for i, s in enumerate(self.times):
            if abs(s - t) <= tol * max(1.0, abs(t)):
                return i
        raise KeyError(f"time {t} not stored")


DISSIPATION_MODES = ("uniform", "split")


def flow_speed(u, lam, law=EXP_LAW):
    """``max(|v| + |H| / sqrt(rho))`` (advective plus Alfven part)."""
    u = np.asarray(u)
    p = q_to_p(u[0], u[4:7], lam)
    rho = law.rho(p)
    vmag = np.sqrt(np.sum(u[1:4] ** 2, axis=0))
    hmag = np.sqrt(np.sum(u[4:7] ** 2, axis=0))
    return float(np.max(vmag + hmag / np.sqrt(rho)))


def wave_speed(u, lam, law=EXP_LAW):
    return flow_speed(u, lam, law) + 1.5 * lam * math.sqrt(law.mu1 * law.mu2)


def stable_dt(u, grid, lam, cfl=0.8, law=EXP_LAW):
    u = u.data if isinstance(u, StateField) else u
    return cfl * min(grid.dx1, grid.dx2) / wave_speed(u, lam, law)


def dissipation(u, grid, lam, epsilon, law=EXP_LAW, parity=STATE_PARITY, s_max=None, mode="uniform"):
    """Hyperdissipation ``-eps * s * (delta1^4 u / dx1 + delta2^4 u / dx2)``.

    ``mode="uniform"`` uses ``s = s_max`` for every component.  ``mode="split"``
    uses the flow speed for every component and adds the acoustic excess
    ``s_max - s_flow`` only on q and, through a grad-div operator
    ``-eps * s * h^3 grad lap div v``, on the gradient part of v.  The discrete
    div/grad pair is exact on the solenoidal subspace, so the split form
    leaves slow vortical motion damped at flow speed whatever lam is.
    """
    if epsilon == 0:
        return np.zeros_like(u)
    if mode not in DISSIPATION_MODES:
        raise ValueError(f"unknown dissipation mode {mode!r}")
    if s_max is None:
        s_max = wave_speed(u, lam, law)
    d1, d2 = fourth_difference(u, grid, parity)
    hyper = d1 / grid.dx1 + d2 / grid.dx2
    if mode == "uniform":
        return -epsilon * s_max * hyper
    s_flow = flow_speed(u, lam, law)
    s_fast = s_max - s_flow
    out = -epsilon * s_flow * hyper
    out[0] -= epsilon * s_fast * hyper[0]
    h = max(grid.dx1, grid.dx2)
    gd = grad_op(laplacian_op(discrete_div(u[1:3], grid), grid), grid)
    out[1:3] -= epsilon * s_fast * h**3 * gd
    return out


def _zero_wall(a, parity):
    for c, s in enumerate(parity.signs):
        if s < 0:
            a[c, 0] = 0.0
            a[c, -1] = 0.0


def rhs(u, grid, lam, epsilon=0.02, law=EXP_LAW, parity=STATE_PARITY, enforce_bc=True, p_max=P_MAX, parts=False, flux_kernel=None, dissipation_mode="uniform"):
    """Semi-discrete tendency ``-A0^{-1} sum_j (A_j + lam C_j) d_j u + D_eps(u)``.

    With ``enforce_bc=False`` wall values of odd components are left as they
    are (used to inject boundary-condition violations).  ``parts=True``
    returns ``(total, dissipation)``.
    """
    u = u.data if isinstance(u, StateField) else np.asarray(u, dtype=float)
    if not np.all(np.isfinite(u)):
        raise HyperbolicityError("non-finite values in state")
    if enforce_bc:
        u = u.copy()
        _zero_wall(u, parity)
    p = q_to_p(u[0], u[4:7], lam)
    pm = float(np.max(np.abs(p)))
    if pm > p_max:
        raise HyperbolicityError(f"|p| = {pm:.3g} exceeds admissible bound {p_max}")
    rho = np.ascontiguousarray(law.rho(p))
    rho_p = law.rho_p(p)
    if not (np.all(rho > 0) and np.all(rho_p > 0)):
        raise HyperbolicityError("equation of state not hyperbolic")
    a = np.ascontiguousarray(rho_p / rho)
    padded = apply_ghost_fill(u, grid, parity) if enforce_bc else _ghost_keep_wall(u, grid, parity)
    g, n1, h = grid.ghost, grid.n1, grid.dx1
    d1 = (padded[:, g - 2 : g - 2 + n1] - 8.0 * padded[:, g - 1 : g - 1 + n1]
          + 8.0 * padded[:, g + 1 : g + 1 + n1] - padded[:, g + 2 : g + 2 + n1]) / (12.0 * h)
    d2 = diff(u, 2, grid)
    kern = flux_kernel or kernels.flux_tendency
    tend = kern(np.ascontiguousarray(u), np.ascontiguousarray(d1), np.ascontiguousarray(d2), rho, a, float(lam))
    diss = dissipation(u, grid, lam, epsilon, law, parity, mode=dissipation_mode)
    tend = tend + diss
    if not np.all(np.isfinite(tend)):
        raise HyperbolicityError("non-finite tendency")
    if enforce_bc:
        _zero_wall(tend, parity)
    return (tend, diss) if parts else tend


def _ghost_keep_wall(u, grid, parity):
    """Reflection ghosts without forcing odd components to vanish on the wall node."""
    g, n1 = grid.ghost, u.shape[1]
    out = np.empty((u.shape[0], n1 + 2 * g, u.shape[2]))
    out[:, g : g + n1] = u
    s = np.asarray(parity.signs, dtype=float)[:, None]
    for i in range(1, g + 1):
        out[:, g - i] = s * u[:, i]
        out[:, g + n1 - 1 + i] = s * u[:, n1 - 1 - i]
    return out


def step_ssprk3(u, dt, L, rate0=None, enforce_bc=True, parity=STATE_PARITY):
    """One Shu-Osher SSP-RK3 step of ``du/dt = L(u)``; returns ``(u_new, L(u))``."""
    u = np.asarray(u, dtype=float)
    k0 = L(u) if rate0 is None else rate0
    u1 = u + dt * k0
    if enforce_bc:
        _zero_wall(u1, parity)
    u2 = 0.75 * u + 0.25 * (u1 + dt * L(u1))
    if enforce_bc:
        _zero_wall(u2, parity)
    un = u / 3.0 + 2.0 / 3.0 * (u2 + dt * L(u2))
    if enforce_bc:
        _zero_wall(un, parity)
    return un, k0


def clean_divergence(u, grid):
    """Replace (H1, H2) by their solenoidal part; H3 and the other components are untouched."""
    u = (u.data if isinstance(u, StateField) else np.asarray(u, dtype=float)).copy()
    u[4:7] = project_S(u[4:7], grid)
    return u


def div_H(u, grid):
    return float(np.max(np.abs(discrete_div(np.asarray(u)[4:6], grid))))


def energy(u, grid, lam, law=EXP_LAW):
    """``int A0 u . u`` (trapezoid in x1)."""
    u = np.asarray(u)
    A0 = assemble_A0(u, lam, law)
    dens = np.einsum("ijab,aij,bij->ij", A0, u, u)
    return float(grid.integrate(dens))


def energy_balance_terms(u, u_t, diss, grid, lam, law=EXP_LAW):
    """Return ``(int DivAbar u.u, 2 int A0 u . D_eps u)`` at one instant."""
    D = div_A_bar(u, u_t, lam, grid, law)
    transport = float(grid.integrate(np.einsum("ijab,aij,bij->ij", D, u, u)))
    A0 = assemble_A0(u, lam, law)
    sink = 2.0 * float(grid.integrate(np.einsum("ijab,aij,bij->ij", A0, u, diss)))
    return transport, sink


def boundary_energy_flux(u, grid, lam, law=EXP_LAW):
    """``int_walls`` of the outward boundary contribution to ``d/dt int A0 u.u``.

    At x1 = 0 (outward normal -e1) this is ``+int (A1 u.u + 2 lam q v1) dx2``
    and the opposite sign at x1 = L1.  It vanishes when v1 = H1 = 0 there.
    """
    u = np.asarray(u)
    A0 = assemble_A0(u, lam, law)
    dens = np.einsum("ijab,aij,bij->ij", A0, u, u)
    vH = np.sum(u[1:4] * u[4:7], axis=0)
    f = u[1] * dens - 2.0 * u[4] * vH + 2.0 * lam * u[0] * u[1]
    return float((np.sum(f[0]) - np.sum(f[-1])) * grid.dx2)


def _lagrange_derivative(ts, at):
    """Weights of the derivative at ``ts[at]`` of the quadratic through three points."""
    w = []
    x = ts[at]
    for i in range(3):
        others = [ts[j] for j in range(3) if j != i]
        den = np.prod([ts[i] - o for o in others])
        num = sum(np.prod([x - others[k] for k in range(2) if k != m]) for m in range(2))
        w.append(num / den)
    return w


def energy_residual(window, grid, lam, epsilon, law=EXP_LAW, parity=STATE_PARITY, at=1, dissipation_mode="uniform"):
    """Relative mismatch of the discrete energy balance at one state of a 3-state window.

    ``window`` holds three ``(t, u)`` pairs from consecutive steps.  The
    result is ``|dE/dt - int DivAbar u.u - 2 int A0 u.D_eps u| / E`` with
    ``dE/dt`` from the quadratic through the three (possibly uneven) samples,
    evaluated at ``window[at]`` (centred for ``at=1``).
    """
    if len(window) < 3:
        raise ValueError("energy residual needs at least three consecutive states")
    window = list(window)[-3:]
    ts = [w[0] for w in window]
    Es = [energy(w[1], grid, lam, law) for w in window]
    dEdt = float(np.dot(_lagrange_derivative(ts, at), Es))
    u1 = np.asarray(window[at][1])
    enforce = all(np.all(u1[c, [0, -1]] == 0) for c, s in enumerate(parity.signs) if s < 0)
    ut, diss = rhs(u1, grid, lam, epsilon, law, parity=parity, enforce_bc=enforce, parts=True, dissipation_mode=dissipation_mode)
    transport, sink = energy_balance_terms(u1, ut, diss, grid, lam, law)
    if Es[at] == 0:
        return 0.0
    return abs(dEdt - transport - sink) / Es[at]


def wall_dq(u, grid):
    """Max one-sided ``|d1 q|`` on the two wall nodes."""
    d = diff(np.asarray(u)[0], 1, grid)
    return float(max(np.max(np.abs(d[0])), np.max(np.abs(d[-1]))))


def normal_velocity_identity(u, u_t, grid, lam, law=EXP_LAW):
    """Both sides of ``d1 v1 = -d2 v2 - (a/lam) {(dt + v.grad) q - h.(dt + v.grad) H}``.

    ``a = rho_p/rho`` and ``h = H/lam``; derivatives use the one-sided wall stencils.
    """
    u = np.asarray(u)
    u_t = np.asarray(u_t)
    p = q_to_p(u[0], u[4:7], lam)
    a = law.ratio(p)
    v1, v2 = u[1], u[2]

    def mat(f):
        return v1 * diff(f, 1, grid) + v2 * diff(f, 2, grid)

    Dq = u_t[0] + mat(u[0])
    DH = u_t[4:7] + np.stack([mat(u[4 + k]) for k in range(3)])
    right = -diff(u[2], 2, grid) - a / lam * (Dq - np.sum(u[4:7] / lam * DH, axis=0))
    return diff(u[1], 1, grid), right


def _output_times(T, dt_out):
    n = int(math.floor(T / dt_out + 1e-9))
    ts = [k * dt_out for k in range(n + 1)]
    if T - ts[-1] > 1e-12 * max(T, 1.0):
        ts.append(T)
    return ts


def run(config, grid, initial, law=None, flux_kernel=None, callback=None):
    """Integrate to ``config.T``; returns a :class:`Trajectory` of outputs.

    The initial field is divergence-cleaned first.  Outputs are taken on the
    uniform cadence ``output_dt`` (steps are shortened to land on them) and
    store the state together with its semi-discrete time derivative.
    """
    law = law or config.law
    lam = config.lam
    u = initial.data if isinstance(initial, StateField) else np.asarray(initial, dtype=float)
    u = u.copy()
    _zero_wall(u, STATE_PARITY)
    traj = Trajectory(lam=lam, grid=grid, meta={"config": config, "eos": law.tag})

    def L(x):
        return rhs(x, grid, lam, config.epsilon, law, p_max=config.p_max, flux_kernel=flux_kernel, dissipation_mode=config.dissipation)

    t = 0.0
    try:
        u = clean_divergence(u, grid)
        rate = L(u)
    except HyperbolicityError as exc:
        raise BlowUpError(str(exc), 0.0, traj) from exc
    outputs = _output_times(config.T, config.dt_out)
    pending = []  # indices into traj awaiting their energy residual
    window = [(t, u)]
    out_i = 0

    def store(t, u, rate):
        p = q_to_p(u[0], u[4:7], lam)
        traj.append(t, u, rate, divH=div_H(u, grid), p_max=float(np.max(np.abs(p))))

    store(t, u, rate)
    if config.energy_diagnostics:
        pending.append(0)
    out_i = 1
    nstep = 0
    since_clean = 0
    pre_clean = 0.0  # largest div H seen just before a cleaning pass
    while out_i < len(outputs):
        target = outputs[out_i]
        try:
            dt = stable_dt(u, grid, lam, config.cfl, law)
            landing = t + dt >= target - 1e-12 * max(1.0, target)
            if landing:
                dt = target - t
            u_new, _ = step_ssprk3(u, dt, L, rate0=rate)
            t = target if landing else t + dt
            nstep += 1
            since_clean += 1
            if (config.clean_every and since_clean >= config.clean_every) or (landing and config.clean_outputs):
                pre_clean = max(pre_clean, div_H(u_new, grid))
                u_new = clean_divergence(u_new, grid)
                since_clean = 0
            rate = L(u_new)
        except HyperbolicityError as exc:
            raise BlowUpError(f"run aborted at t={t:.6g}: {exc}", t, traj) from exc
        u = u_new
        window.append((t, u))
        window = window[-3:]
        if pending and len(window) == 3:
            for idx in list(pending):
                tp = traj.times[idx]
                at = next((k for k in range(2) if window[k][0] == tp), None)
                if at is not None:
                    traj.diagnostics["energy_residual"][idx] = energy_residual(window, grid, lam, config.epsilon, law, at=at, dissipation_mode=config.dissipation)
                    pending.remove(idx)
        if landing:
            store(t, u, rate)
            out_i += 1
            if config.energy_diagnostics:
                pending.append(len(traj) - 1)
        if callback is not None:
            callback(t, u)
        if nstep >= config.max_steps:
            raise BlowUpError("step budget exhausted", t, traj)
    if len(window) == 3:
        for idx in pending:
            tp = traj.times[idx]
            at = next((k for k in range(3) if window[k][0] == tp), None)
            if at is not None:
                traj.diagnostics["energy_residual"][idx] = energy_residual(window, grid, lam, config.epsilon, law, at=at, dissipation_mode=config.dissipation)
    traj.meta["steps"] = nstep
    traj.meta["divH_pre_clean_max"] = pre_clean
    traj.meta["final_time"] = t
    return traj
