"""Discrete anisotropic (conormal) Sobolev norms and the associated property battery.

A term ``(a1, a2, h)`` stands for ``(sigma d1)^a1 d2^a2 d1^h``; its order is
``a1 + a2 + 2h``.  x3 derivatives vanish identically for 2.5-D fields and
are not enumerated.  Quadrature is the trapezoid rule in x1 and the
rectangle rule (exact for trigonometric polynomials) in periodic x2.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .grid import diff

FAMILIES = ("star", "star2", "star3")
QUADRATURE_TAG = "trapezoid-x1/rectangle-x2"
MAX_M = 4


def index_set(family, m):
    """Ordered list of ``(a1, a2, h)`` for the given family and order."""
    if family not in FAMILIES:
        raise ValueError(f"unknown norm family {family!r}")
    if m < 0 or m > MAX_M + 1:
        raise ValueError(f"order m={m} outside supported range")
    out = []
    if m == 0:
        return [(0, 0, 0)]
    for h in range(0, m + 2):
        for na in range(0, m + 1):
            if family == "star":
                ok = na + 2 * h <= m
            elif family == "star2":
                ok = na + 2 * h <= m + 1 and na <= m
            else:
                if h == 0:
                    ok = na <= m
                elif h == 1:
                    ok = na + 2 <= m + 1
                else:
                    ok = na + 2 * h <= m + 2
            if not ok:
                continue
            for a1 in range(na, -1, -1):
                out.append((a1, na - a1, h))
    return out


@dataclass(frozen=True)
class NormSpec:
    family: str = "star2"
    m: int = 2
    lam: float | None = None
    k_max_time: int = 1
    subdomain: tuple | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown norm family {self.family!r}")
        if not 0 <= self.m <= MAX_M:
            raise ValueError(f"order budget exceeded: m={self.m} (max {MAX_M})")
        if not 0 <= self.k_max_time <= 2:
            raise ValueError("time-derivative order must be 0, 1 or 2")
        if self.k_max_time > self.m:
            raise ValueError("time-derivative order cannot exceed m")


@dataclass
class NormReport:
    total: float
    terms: dict = field(default_factory=dict)
    quadrature: str = QUADRATURE_TAG

    def to_json(self):
        return json.dumps({"total": self.total, "terms": self.terms, "quadrature": self.quadrature}, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(d["total"], d["terms"], d["quadrature"])


def _label(a1, a2, h, k=None):
    core = f"a=({a1},{a2},0),h={h}"
    return core if k is None else f"t{k}:{core}"


def _term_values(f, terms, grid, subdomain):
    """L2 norms of each ``(a1, a2, h)`` derivative of ``f`` (components summed)."""
    f = np.asarray(f, dtype=float)
    w1, m2 = grid.quadrature(subdomain)
    cache = {}
    s = grid.sigma_values[:, None]

    def get(a1, a2, h):
        key = (a1, a2, h)
        if key in cache:
            return cache[key]
        if a1 > 0:
            val = s * diff(get(a1 - 1, a2, h), 1, grid)
        elif a2 > 0:
            val = diff(get(0, a2 - 1, h), 2, grid)
        elif h > 0:
            val = diff(get(0, 0, h - 1), 1, grid)
        else:
            val = f
        cache[key] = val
        return val

    out = {}
    for a1, a2, h in terms:
        g = get(a1, a2, h)
        sq = np.einsum("...ij,i,j->...", g * g, w1, m2) * grid.dx2
        out[(a1, a2, h)] = float(np.sqrt(np.sum(sq)))
    return out


def norm_spatial(field, spec, grid):
    """``||field||_{m, family}`` over ``spec.subdomain`` (whole slab if None)."""
    terms = index_set(spec.family, spec.m)
    vals = _term_values(field, terms, grid, spec.subdomain)
    labelled = {_label(*t): v for t, v in vals.items()}
    total = float(np.sqrt(sum(v * v for v in vals.values())))
    return NormReport(total, labelled)


def _time_derivatives(traj, i, kmax):
    out = [np.asarray(traj.states[i])]
    if kmax >= 1:
        if traj.rates[i] is None:
            raise ValueError("trajectory lacks stored time derivatives")
        out.append(np.asarray(traj.rates[i]))
    if kmax >= 2:
        t = traj.times
        if i == 0 or i == len(t) - 1:
            raise ValueError("second time derivative needs neighbours on both sides")
        h0, h1 = t[i] - t[i - 1], t[i + 1] - t[i]
        r0, r1, r2 = traj.rates[i - 1], traj.rates[i], traj.rates[i + 1]
        out.append((-h1 / (h0 * (h0 + h1))) * r0 + ((h1 - h0) / (h0 * h1)) * r1 + (h0 / (h1 * (h0 + h1))) * r2)
    return out


def _window_indices(traj, window, kmax):
    t0, t1 = (-np.inf, np.inf) if window is None else window
    idx = [i for i, t in enumerate(traj.times) if t0 - 1e-12 <= t <= t1 + 1e-12]
    if len(idx) < kmax + 1:
        raise ValueError(f"window holds {len(idx)} samples, need at least {kmax + 1}")
    if kmax >= 2:
        idx = [i for i in idx if 0 < i < len(traj.times) - 1]
        if not idx:
            raise ValueError("no interior samples for second time derivative")
    return idx


def _spacetime_sq(traj, i, spec, grid, drop_zeroth):
    lam = spec.lam
    total = 0.0
    derivs = _time_derivatives(traj, i, spec.k_max_time)
    for k, d in enumerate(derivs):
        mk = spec.m - k
        w = 1.0 if lam is None else lam ** (-k)
        terms = index_set(spec.family, mk)
        if drop_zeroth and k == 0:
            terms = [t for t in terms if t != (0, 0, 0)]
        vals = _term_values(d, terms, grid, spec.subdomain)
        total += sum((w * v) ** 2 for v in vals.values())
    return total


def norm_spacetime_lambda(traj, spec, window=None, grid=None):
    """``sup_t (sum_k ||lam^-k d_t^k u(t)||^2_{m-k})^(1/2)`` over stored times in ``window``.

    ``spec.lam = None`` gives the unweighted norm.
    """
    grid = grid or traj.grid
    idx = _window_indices(traj, window, spec.k_max_time)
    return float(max(np.sqrt(_spacetime_sq(traj, i, spec, grid, False)) for i in idx))


def seminorm_bracket(traj, spec, window=None, grid=None):
    """As :func:`norm_spacetime_lambda` without the zeroth-order term of u itself."""
    grid = grid or traj.grid
    idx = _window_indices(traj, window, spec.k_max_time)
    return float(max(np.sqrt(_spacetime_sq(traj, i, spec, grid, True)) for i in idx))


def w1inf_star(field, grid):
    """``|u|_inf + |sigma d1 u|_inf + |d2 u|_inf`` (x3 term vanishes)."""
    f = np.asarray(field, dtype=float)
    s = grid.sigma_values[:, None]
    return float(np.max(np.abs(f)) + np.max(np.abs(s * diff(f, 1, grid))) + np.max(np.abs(diff(f, 2, grid))))


def characterization_ratio(u, grid, m):
    """``||u||_{m,**} / (||u||_{m,*} + ||d1 u||_{m-1,*})``."""
    a = norm_spatial(u, NormSpec("star2", m), grid).total
    b = norm_spatial(u, NormSpec("star", m), grid).total
    c = norm_spatial(diff(u, 1, grid), NormSpec("star", m - 1), grid).total
    return a / (b + c)


def moser_ratio(u, v, grid, m):
    """``||uv||_{m,**} / (||u||_{m,**} |v|_{W1inf*} + |u|_{W1inf*} ||v||_{m,**})``."""
    spec = NormSpec("star2", m)
    num = norm_spatial(np.asarray(u) * np.asarray(v), spec, grid).total
    den = norm_spatial(u, spec, grid).total * w1inf_star(v, grid) + w1inf_star(u, grid) * norm_spatial(v, spec, grid).total
    return num / den


def divide_by_sigma(u, grid, tol=1e-12):
    """``u / sigma`` with the wall value replaced by ``d1 u`` (the limit); requires ``u = 0`` on x1 = 0."""
    u = np.asarray(u, dtype=float)
    scale = max(float(np.max(np.abs(u))), 1.0)
    if np.max(np.abs(u[0])) > tol * scale:
        raise ValueError("u must vanish on the wall x1 = 0 for sigma-division")
    out = np.empty_like(u)
    s = grid.sigma_values
    out[1:] = u[1:] / s[1:, None]
    out[0] = diff(u, 1, grid)[0]
    return out


def sigma_division_ratio(u, grid, m):
    """``||u/sigma||_{m-1,*} / ||u||_{m,**}``."""
    num = norm_spatial(divide_by_sigma(u, grid), NormSpec("star", m - 1), grid).total
    return num / norm_spatial(u, NormSpec("star2", m), grid).total


def default_test_functions(L1=1.0, L2=1.0):
    """Smooth test functions ``(name, f(X1, X2))``; the first group vanishes on x1 = 0."""
    k = 2.0 * np.pi / L2
    return [
        ("sin1", lambda X1, X2: np.sin(np.pi * X1 / L1) * np.cos(k * X2)),
        ("x1exp", lambda X1, X2: X1 * np.exp(-X1) * (1.0 + 0.5 * np.sin(k * X2))),
        ("sin2", lambda X1, X2: np.sin(2.0 * np.pi * X1 / L1) * (np.cos(k * X2) + 0.3 * np.sin(2 * k * X2))),
        ("poly", lambda X1, X2: X1 * (1.0 - 0.5 * X1) * np.cos(k * X2) ** 2),
    ]


def norm_property_battery(ladder=((33, 16), (65, 32), (129, 64)), m=2, functions=None, L1=1.0, L2=1.0):
    """Ratios of the characterization, Moser and sigma-division inequalities across a refinement ladder.

    Returns ``{"levels": [...], "sup": {name: [per level]}, "change": {name: rel}}``
    where ``change`` is the relative spread ``max/min - 1`` of the observed
    sup over all levels of the ladder.
    """
    from .grid import build_grid

    functions = functions or default_test_functions(L1, L2)
    sups = {"characterization": [], "moser": [], "sigma_division": []}
    for n1, n2 in ladder:
        grid = build_grid(n1, n2, L1, L2)
        X1, X2 = grid.mesh()
        fields = [(name, f(X1, X2)) for name, f in functions]
        ch = max(characterization_ratio(u, grid, m) for _, u in fields)
        mo = max(moser_ratio(u, v, grid, m) for _, u in fields for _, v in fields)
        sd = max(sigma_division_ratio(u, grid, m) for _, u in fields if np.max(np.abs(u[0])) == 0)
        sups["characterization"].append(ch)
        sups["moser"].append(mo)
        sups["sigma_division"].append(sd)
    change = {k: max(v) / min(v) - 1.0 for k, v in sups.items()}
    return {"levels": [list(l) for l in ladder], "m": m, "sup": sups, "change": change}
