"""State container, equation of state and initial-data families."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .grid import STATE_PARITY, diff

COMPONENTS = ("q", "v1", "v2", "v3", "H1", "H2", "H3")
NCOMP = 7
P_MAX = 10.0


class HyperbolicityError(RuntimeError):
    """Raised when a state leaves the admissible (hyperbolic) range."""


@dataclass(frozen=True)
class MaterialLaw:
    """Barotropic law p -> rho(p) with its first two derivatives."""

    tag: str
    rho: Callable
    rho_p: Callable
    rho_pp: Callable

    @property
    def rho_bar(self):
        return float(self.rho(0.0))

    @property
    def rho_p_bar(self):
        return float(self.rho_p(0.0))

    @property
    def mu1(self):
        return self.rho_bar / self.rho_p_bar

    @property
    def mu2(self):
        return 1.0 / self.rho_bar

    def ratio(self, p):
        """rho_p / rho"""
        return self.rho_p(p) / self.rho(p)

    def ratio_p(self, p):
        """d(rho_p / rho)/dp"""
        r, rp, rpp = self.rho(p), self.rho_p(p), self.rho_pp(p)
        return (rpp * r - rp * rp) / (r * r)


EXP_LAW = MaterialLaw("exp", np.exp, np.exp, np.exp)


def power_law(gamma, rho0=1.0, p0=1.0):
    """Isentropic gas rho = rho0 (1 + p/p0)^(1/gamma), admissible for p > -p0."""
    g = 1.0 / gamma

    def rho(p):
        return rho0 * np.power(1.0 + np.asarray(p) / p0, g)

    def rho_p(p):
        return rho0 * g / p0 * np.power(1.0 + np.asarray(p) / p0, g - 1.0)

    def rho_pp(p):
        return rho0 * g * (g - 1.0) / p0**2 * np.power(1.0 + np.asarray(p) / p0, g - 2.0)

    return MaterialLaw(f"power:{gamma}:{rho0}:{p0}", rho, rho_p, rho_pp)


LAWS = {"exp": EXP_LAW}


def law_from_tag(tag):
    if tag in LAWS:
        return LAWS[tag]
    if tag.startswith("power:"):
        parts = [float(s) for s in tag.split(":")[1:]]
        return power_law(*parts)
    raise ValueError(f"unknown EOS tag {tag!r}")


def eos(p, law=EXP_LAW):
    """Return ``(rho(p), rho_p(p))``; raise if either is not positive."""
    with np.errstate(invalid="ignore"):
        r = np.asarray(law.rho(p), dtype=float)
        rp = np.asarray(law.rho_p(p), dtype=float)
    if not (np.all(r > 0) and np.all(rp > 0)):
        raise HyperbolicityError("equation of state not hyperbolic at given pressure")
    if r.ndim == 0:
        return float(r), float(rp)
    return r, rp


def p_to_q(p, H, lam):
    H = np.asarray(H, dtype=float)
    return lam * np.asarray(p, dtype=float) + np.sum(H * H, axis=0) / (2.0 * lam)


def q_to_p(q, H, lam):
    H = np.asarray(H, dtype=float)
    return np.asarray(q, dtype=float) / lam - np.sum(H * H, axis=0) / (2.0 * lam * lam)


@dataclass
class StateField:
    """Seven-component field ``(q, v1, v2, v3, H1, H2, H3)`` on the grid."""

    data: np.ndarray
    lam: float

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.ndim != 3 or self.data.shape[0] != NCOMP:
            raise ValueError("state data must have shape (7, n1, n2)")
        if self.lam < 1:
            raise ValueError("lambda must be >= 1")

    @classmethod
    def zeros(cls, grid, lam):
        return cls(np.zeros((NCOMP, grid.n1, grid.n2)), lam)

    @property
    def q(self):
        return self.data[0]

    @property
    def v(self):
        return self.data[1:4]

    @property
    def H(self):
        return self.data[4:7]

    def pressure(self):
        return q_to_p(self.q, self.H, self.lam)

    def copy(self):
        return StateField(self.data.copy(), self.lam)

    def enforce_walls(self):
        self.data[1, 0] = self.data[1, -1] = 0.0
        self.data[4, 0] = self.data[4, -1] = 0.0
        return self


def check_admissible(state, law=EXP_LAW, p_max=P_MAX):
    p = state.pressure()
    if not np.all(np.isfinite(state.data)):
        raise HyperbolicityError("non-finite values in state")
    pm = float(np.max(np.abs(p)))
    if pm > p_max:
        raise HyperbolicityError(f"|p| = {pm:.3g} exceeds admissible bound {p_max}")
    eos(p, law)
    return pm


@dataclass(frozen=True)
class DataFamily:
    """Parameters of a divergence-free, wall-compatible initial-data family.

    ``amp_H`` and ``amp_v`` scale two stream functions ``chi(x1) g(x2)``
    with ``chi = sin(pi x1/L1)^cutoff_order``; ``modes_H`` / ``modes_v`` list
    the x2 wavenumbers of ``g``.  Ill-prepared data add the gradient of
    ``phi = amp_phi cos(m pi x1/L1) cos(2 pi n x2/L2)`` with
    ``(m, n) = phi_mode``.  ``pressure`` picks q0 for well-prepared data:
    ``"zero"`` or ``"limit"`` (q0 = Pi0/lam with Pi0 the incompressible
    total pressure of the initial state).
    """

    kind: str = "well_prepared"
    amp_H: float = 0.015
    amp_v: float = 0.015
    amp_phi: float = 0.0
    h3: float = 0.0
    modes_H: tuple = (1,)
    modes_v: tuple = (2,)
    phi_mode: tuple = (1, 8)
    cutoff_order: int = 5
    pressure: str = "zero"
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in ("well_prepared", "ill_prepared"):
            raise ValueError(f"unknown data kind {self.kind!r}")
        if self.cutoff_order < 4:
            raise ValueError("cutoff order must be >= 4 (data must vanish to 4th order at walls)")
        if self.pressure not in ("zero", "limit"):
            raise ValueError(f"unknown pressure option {self.pressure!r}")
        if self.phi_mode[0] < 0 or self.phi_mode[1] < 0:
            raise ValueError("phi mode indices must be non-negative")


def _phases(family, nmodes, salt):
    if family.seed is None:
        return np.zeros(nmodes)
    rng = np.random.default_rng([family.seed, salt])
    return rng.uniform(0.0, 2.0 * np.pi, nmodes)


def _stream_field(x1, x2, L1, L2, amp, modes, p, phases):
    """Return (d2 psi, -d1 psi) for psi = amp * chi(x1) * g(x2)."""
    s = np.sin(np.pi * x1 / L1)
    chi = s**p
    dchi = p * s ** (p - 1) * np.cos(np.pi * x1 / L1) * (np.pi / L1)
    g = np.zeros_like(x2)
    dg = np.zeros_like(x2)
    for m, ph in zip(modes, phases):
        k = 2.0 * np.pi * m / L2
        if m == 0:
            g = g + 1.0
        else:
            g = g + np.cos(k * x2 + ph) / max(len(modes), 1)
            dg = dg - k * np.sin(k * x2 + ph) / max(len(modes), 1)
    a = amp * chi[:, None] * dg[None, :]
    b = -amp * dchi[:, None] * g[None, :]
    return a, b


def gradient_part(family, grid):
    """Analytic ``grad phi`` of the ill-prepared family (zero otherwise)."""
    X1, X2 = grid.mesh()
    m, n = family.phi_mode
    if family.kind != "ill_prepared" or family.amp_phi == 0.0:
        return np.zeros((3, grid.n1, grid.n2))
    k1 = m * np.pi / grid.L1
    k2 = 2.0 * np.pi * n / grid.L2
    a = family.amp_phi
    out = np.zeros((3, grid.n1, grid.n2))
    out[0] = -a * k1 * np.sin(k1 * X1) * np.cos(k2 * X2)
    out[1] = -a * k2 * np.cos(k1 * X1) * np.sin(k2 * X2)
    return out


def gradient_part_l2(family, L1=1.0, L2=1.0):
    """Exact ``||grad phi||_{L2}`` over the full slab."""
    if family.kind != "ill_prepared":
        return 0.0
    m, n = family.phi_mode
    k1 = m * np.pi / L1
    k2 = 2.0 * np.pi * n / L2
    c1 = 0.5 if m > 0 else 1.0
    c2 = 0.5 if n > 0 else 1.0
    # |d1 phi|^2 carries sin^2 in x1, |d2 phi|^2 carries cos^2
    i1 = k1**2 * (0.5 if m > 0 else 0.0) * c2
    i2 = k2**2 * c1 * (0.5 if n > 0 else 0.0)
    return abs(family.amp_phi) * np.sqrt((i1 + i2) * L1 * L2)


def make_initial_data(family, grid, lam, law=EXP_LAW):
    """Sample the family on the grid and return a :class:`StateField`."""
    x1, x2 = grid.x1, grid.x2
    p = family.cutoff_order
    state = StateField.zeros(grid, lam)
    h1, h2 = _stream_field(x1, x2, grid.L1, grid.L2, family.amp_H, family.modes_H, p, _phases(family, len(family.modes_H), 1))
    w1, w2 = _stream_field(x1, x2, grid.L1, grid.L2, family.amp_v, family.modes_v, p, _phases(family, len(family.modes_v), 2))
    # sampled stream fields are solenoidal only to truncation order; project
    # them so the discrete constraint holds to rounding
    from .helmholtz import project_S

    zero = np.zeros_like(h1)
    state.data[4:7] = project_S(np.stack([h1, h2, zero]), grid)
    state.data[6] = family.h3
    state.data[1:4] = project_S(np.stack([w1, w2, zero]), grid)
    state.data[1:4] += gradient_part(family, grid)
    if family.kind == "well_prepared" and family.pressure == "limit":
        from .incompressible import total_pressure

        state.data[0] = total_pressure(state.data[1:4], state.data[4:7], grid, law) / lam
    state.enforce_walls()
    return state


@dataclass
class CompatibilityReport:
    wall_v1: float
    wall_H1: float
    div_H: float
    tolerances: dict = field(default_factory=dict)

    @property
    def flags(self):
        return {
            "wall_v1": self.wall_v1 > self.tolerances.get("wall", 0.0),
            "wall_H1": self.wall_H1 > self.tolerances.get("wall", 0.0),
            "div_H": self.div_H > self.tolerances.get("div", 0.0),
        }

    @property
    def ok(self):
        return not any(self.flags.values())


def discrete_divergence(vec, grid):
    """``d1 f1 + d2 f2`` with the solver stencils (wall-odd normal component)."""
    return diff(vec[0], 1, grid, parity=STATE_PARITY[1]) + diff(vec[1], 2, grid)


def check_compatibility(state, grid, wall_tol=0.0, div_tol=None):
    """Report wall traces of v1, H1 and the sup of the discrete div H.

    The default divergence tolerance scales as ``dx^4`` (the stencil order).
    """
    if div_tol is None:
        div_tol = 1e3 * max(grid.dx1, grid.dx2) ** 4
    d = state.data
    wall_v1 = float(max(np.max(np.abs(d[1, 0])), np.max(np.abs(d[1, -1]))))
    wall_H1 = float(max(np.max(np.abs(d[4, 0])), np.max(np.abs(d[4, -1]))))
    div_H = float(np.max(np.abs(discrete_divergence(d[4:6], grid))))
    return CompatibilityReport(wall_v1, wall_H1, div_H, {"wall": wall_tol, "div": div_tol})
