"""Lambda sweeps against the incompressible limit, layer detection and persistence."""
from __future__ import annotations

import configparser
import hashlib
import math
import os
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import checkpoint, compressible, incompressible
from .compressible import BlowUpError, SolverConfig
from .grid import build_grid, diff
from .helmholtz import div, project_G
from .norms import NormSpec, norm_spatial
from .state import DataFamily, law_from_tag, make_initial_data

COLUMNS = (
    "lam",
    "t",
    "err_v",
    "err_q",
    "err_H",
    "norm_ss_lambda",
    "norm_ss_unweighted",
    "wp_metric",
    "divH",
    "energy_residual",
    "grad_q_err",
)


class ConfigError(ValueError):
    """Invalid run configuration."""


@dataclass(frozen=True)
class RunConfig:
    n1: int = 129
    n2: int = 64
    L1: float = 1.0
    L2: float = 1.0
    eos: str = "exp"
    family: DataFamily = field(default_factory=DataFamily)
    lambdas: tuple = (4.0, 8.0, 16.0, 32.0)
    T: float = 0.5
    cfl: float = 0.8
    epsilon: float = 0.02
    clean_every: int = 1
    dissipation: str = "uniform"
    output_dt: float | None = None
    out_dir: str | None = None
    subdomain: tuple | None = None
    t0: float | None = None
    checkpoints: bool = True
    workers: int = 1

    def __post_init__(self):
        lams = tuple(float(x) for x in self.lambdas)
        if not lams:
            raise ConfigError("lambda list is empty")
        if any(x < 1 for x in lams):
            raise ConfigError("all lambdas must be >= 1")
        if any(b <= a for a, b in zip(lams, lams[1:])):
            raise ConfigError("lambda list must be strictly increasing")
        object.__setattr__(self, "lambdas", lams)
        if self.T <= 0:
            raise ConfigError("T must be positive")
        if not 0 < self.cfl <= 1:
            raise ConfigError("cfl must lie in (0, 1]")
        if self.epsilon < 0:
            raise ConfigError("epsilon must be >= 0")
        if self.clean_every < 0:
            raise ConfigError("clean_every must be >= 0")
        if self.dissipation not in compressible.DISSIPATION_MODES:
            raise ConfigError(f"unknown dissipation mode {self.dissipation!r}")
        if self.output_dt is not None and not 0 < self.output_dt <= self.T:
            raise ConfigError("output_dt must lie in (0, T]")
        try:
            law_from_tag(self.eos)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        K = self.measure_subdomain
        if not (0 <= K[0][0] < K[0][1] <= self.L1 + 1e-12):
            raise ConfigError("subdomain x1 range must lie inside [0, L1]")
        if not 0 < self.layer_split < self.T:
            raise ConfigError("t0 must lie in (0, T)")

    @property
    def measure_subdomain(self):
        if self.subdomain is not None:
            return tuple(tuple(float(v) for v in r) for r in self.subdomain)
        return ((0.0, 0.8 * self.L1), (0.0, self.L2))

    @property
    def layer_split(self):
        return self.t0 if self.t0 is not None else 0.1 * self.T

    @property
    def dt_out(self):
        return self.output_dt if self.output_dt else self.T / 20.0

    def grid(self):
        return build_grid(self.n1, self.n2, self.L1, self.L2)

    def solver_config(self, lam):
        return SolverConfig(lam=lam, cfl=self.cfl, epsilon=self.epsilon, T=self.T, clean_every=self.clean_every, output_dt=self.dt_out, eos=self.eos, dissipation=self.dissipation)

    def limit_config(self):
        return incompressible.LimitConfig(cfl=self.cfl, epsilon=self.epsilon, T=self.T, output_dt=self.dt_out, eos=self.eos)

    def canonical(self):
        """Order-stable text form used for hashing (excludes output location and worker count)."""
        d = asdict(self)
        d.pop("out_dir")
        d.pop("workers")
        d["subdomain"] = self.measure_subdomain
        d["t0"] = self.layer_split
        d["output_dt"] = self.dt_out
        return repr(sorted(d.items()))

    def digest(self):
        return hashlib.sha256(self.canonical().encode()).hexdigest()


def _floats(text):
    return tuple(float(x) for x in text.replace(";", ",").split(",") if x.strip())


def _ints(text):
    return tuple(int(x) for x in text.replace(";", ",").split(",") if x.strip())


def parse_config(text, overrides=None):
    """Build a RunConfig from INI text.

    Sections (all optional): ``[grid]`` n1 n2 L1 L2; ``[physics]`` eos
    lambdas T cfl epsilon clean_every output_dt; ``[data]`` the DataFamily
    fields; ``[measure]`` subdomain (x1a, x1b, x2a, x2b) t0; ``[output]``
    out_dir checkpoints workers.
    """
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"unreadable config: {exc}") from exc
    known = {"grid", "physics", "data", "measure", "output"}
    extra = set(cp.sections()) - known
    if extra:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(extra))}")
    kw = {}
    fam = {}
    try:
        g = cp["grid"] if cp.has_section("grid") else {}
        for k, conv in (("n1", int), ("n2", int), ("L1", float), ("L2", float)):
            if k in g:
                kw[k] = conv(g[k])
        ph = cp["physics"] if cp.has_section("physics") else {}
        for k, conv in (("eos", str), ("T", float), ("cfl", float), ("epsilon", float), ("clean_every", int), ("output_dt", float), ("dissipation", str)):
            if k in ph:
                kw[k] = conv(ph[k])
        if "lambdas" in ph:
            kw["lambdas"] = _floats(ph["lambdas"])
        d = cp["data"] if cp.has_section("data") else {}
        conv_map = {
            "kind": str,
            "amp_H": float,
            "amp_v": float,
            "amp_phi": float,
            "h3": float,
            "modes_H": _ints,
            "modes_v": _ints,
            "phi_mode": _ints,
            "cutoff_order": int,
            "pressure": str,
            "seed": int,
        }
        for k, v in d.items():
            # configparser lower-cases keys
            match = {c.lower(): c for c in conv_map}.get(k)
            if match is None:
                raise ConfigError(f"unknown data key {k!r}")
            fam[match] = conv_map[match](v)
        m = cp["measure"] if cp.has_section("measure") else {}
        if "subdomain" in m:
            s = _floats(m["subdomain"])
            if len(s) != 4:
                raise ConfigError("subdomain needs four numbers")
            kw["subdomain"] = ((s[0], s[1]), (s[2], s[3]))
        if "t0" in m:
            kw["t0"] = float(m["t0"])
        o = cp["output"] if cp.has_section("output") else {}
        if "out_dir" in o:
            kw["out_dir"] = o["out_dir"]
        if "checkpoints" in o:
            kw["checkpoints"] = cp.getboolean("output", "checkpoints")
        if "workers" in o:
            kw["workers"] = int(o["workers"])
    except (ValueError, KeyError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    overrides = dict(overrides or {})
    if "seed" in overrides:
        fam["seed"] = overrides.pop("seed")
    try:
        if fam:
            kw["family"] = DataFamily(**fam)
        kw.update({k: v for k, v in overrides.items() if v is not None})
        cfg = RunConfig(**kw)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.measure_subdomain[0][1] > 0.8 * cfg.L1 + 1e-12:
        raise ConfigError("measurement subdomain must stay within x1 <= 0.8 L1")
    try:
        cfg.grid()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def load_config(path, overrides=None):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    return parse_config(text, overrides)


@dataclass
class ConvergenceTable:
    rows: list = field(default_factory=list)
    columns: tuple = COLUMNS
    meta: dict = field(default_factory=dict)

    def add(self, **vals):
        row = tuple(float(vals[c]) for c in self.columns)
        if any(math.isnan(x) for x in row[:2]):
            raise ValueError("lam and t must be finite")
        self.rows.append(row)

    def lambdas(self):
        return sorted({r[0] for r in self.rows})

    def column(self, name, lam=None):
        j = self.columns.index(name)
        return np.array([r[j] for r in self.rows if lam is None or r[0] == lam])

    def times(self, lam):
        return self.column("t", lam)

    def value(self, name, lam, t, tol=1e-9):
        ts = self.times(lam)
        i = int(np.argmin(np.abs(ts - t)))
        if abs(ts[i] - t) > tol * max(1.0, abs(t)):
            raise KeyError(f"no row at lam={lam}, t={t}")
        return float(self.column(name, lam)[i])

    def to_csv(self):
        return checkpoint.table_to_csv(self.columns, self.rows)

    @classmethod
    def from_csv(cls, text):
        cols, rows = checkpoint.csv_to_table(text)
        return cls(rows=[tuple(r) for r in rows], columns=tuple(cols))


def _l2(f, grid, K):
    f = np.asarray(f)
    return float(np.sqrt(np.sum(grid.integrate(f * f, K))))


def _mask(grid, K):
    w1, m2 = grid.quadrature(K)
    return (w1[:, None] > 0) & (m2[None, :] > 0)


def compare_to_limit(traj_c, traj_i, subdomain, window=None, law=None):
    """Per common timestamp: local errors of the compressible run against the limit.

    Returns a list of dicts with ``t, err_v, err_q, err_H, sup_v, grad_q_err``.
    ``traj_i.meta['pressure']`` (the limit total pressure) is used for
    ``grad_q_err``; without it that metric is NaN.
    """
    grid = traj_c.grid
    lam = traj_c.lam
    K = subdomain
    mask = _mask(grid, K)
    t0, t1 = (-np.inf, np.inf) if window is None else window
    pres = traj_i.meta.get("pressure")
    out = []
    for i, t in enumerate(traj_c.times):
        if not t0 - 1e-12 <= t <= t1 + 1e-12:
            continue
        try:
            j = traj_i.index_of(t)
        except KeyError:
            continue
        u, ref = traj_c.states[i], traj_i.states[j]
        dv = u[1:4] - ref[0:3]
        dH = u[4:7] - ref[3:6]
        row = {
            "t": t,
            "err_v": _l2(dv, grid, K),
            "err_q": _l2(u[0], grid, K),
            "err_H": norm_spatial(dH, NormSpec("star", 1, subdomain=K), grid).total,
            "sup_v": float(np.max(np.abs(dv[:, mask]))),
        }
        if pres is not None:
            gq = np.stack([diff(u[0], 1, grid), diff(u[0], 2, grid)]) * lam
            gP = np.stack([diff(pres[j], 1, grid), diff(pres[j], 2, grid)])
            row["grad_q_err"] = float(np.max(np.sqrt(np.sum((gq - gP) ** 2, axis=0))[mask]))
        else:
            row["grad_q_err"] = float("nan")
        out.append(row)
    if not out:
        raise ValueError("trajectories share no timestamps in the window")
    return out


def wp_metric(u, grid, lam):
    """``lam (||grad q|| + ||div v||)`` over the whole slab."""
    u = np.asarray(u)
    gq = np.stack([diff(u[0], 1, grid), diff(u[0], 2, grid)])
    return lam * (_l2(gq, grid, None) + _l2(div(u[1:3], grid), grid, None))


def _ss_terms(u, rate, grid, lam):
    """Per-time ``(weighted, unweighted)`` values of the m=2 star2 space-time surrogate (k <= 1)."""
    a = norm_spatial(u, NormSpec("star2", 2), grid).total
    b = norm_spatial(rate, NormSpec("star2", 1), grid).total
    return math.hypot(a, b / lam), math.hypot(a, b)


@dataclass
class LayerReport:
    t0: float
    per_lambda: dict
    trends: dict

    def to_dict(self):
        return {"t0": self.t0, "per_lambda": {repr(k): v for k, v in self.per_lambda.items()}, "trends": self.trends}


def detect_initial_layer(table, t0):
    """``e_early = max err_v on [0, t0]``, ``e_late = max err_v on [t0, T]`` per lambda."""
    per = {}
    for lam in table.lambdas():
        ts = table.times(lam)
        ev = table.column("err_v", lam)
        early = ev[ts <= t0 + 1e-12]
        late = ev[ts >= t0 - 1e-12]
        if early.size == 0 or late.size == 0:
            raise ValueError(f"insufficient samples around t0 for lam={lam}")
        e_early, e_late = float(np.max(early)), float(np.max(late))
        per[lam] = {"e_early": e_early, "e_late": e_late, "ratio": e_early / e_late if e_late > 0 else float("inf")}
    trends = {}
    lams = sorted(per)
    if len(lams) >= 2:
        late = [per[l]["e_late"] for l in lams]
        early = [per[l]["e_early"] for l in lams]
        ratio = [per[l]["ratio"] for l in lams]
        trends["e_late_decreasing"] = all(b < a for a, b in zip(late, late[1:]))
        trends["e_early_spread"] = max(early) / min(early) if min(early) > 0 else float("inf")
        trends["ratio_growing"] = all(b > a for a, b in zip(ratio, ratio[1:]))
        # layer: late error shrinks while the early error does not
        trends["layer"] = trends["e_late_decreasing"] and trends["ratio_growing"] and trends["e_early_spread"] <= 2.0
    return LayerReport(t0, per, trends)


@dataclass
class SweepResult:
    table: ConvergenceTable
    trajectories: dict
    limit: object
    failures: dict
    pg_norm: float
    layer: LayerReport | None = None


def limit_initial(config, grid):
    """``(w0, B0)`` of the limit problem from the sampled family (projection is applied by the solver)."""
    s = make_initial_data(replace(config.family, pressure="zero"), grid, 1.0, law_from_tag(config.eos))
    return s.data[1:4].copy(), s.data[4:7].copy()


def _run_one(config, lam):
    grid = config.grid()
    law = law_from_tag(config.eos)
    u0 = make_initial_data(config.family, grid, lam, law)
    try:
        return lam, compressible.run(config.solver_config(lam), grid, u0, law=law), None
    except BlowUpError as exc:
        return lam, exc.trajectory, {"time": exc.time, "message": str(exc)}


def run_sweep(config, write=None):
    """Run the limit reference and every lambda; returns a :class:`SweepResult`.

    Files (when ``config.out_dir`` is set and ``write`` is not False):
    ``table.csv``, ``meta.json``, ``layer.json`` and per-lambda checkpoints
    of the final state.
    """
    grid = config.grid()
    law = law_from_tag(config.eos)
    K = config.measure_subdomain
    w0, B0 = limit_initial(config, grid)
    limit = incompressible.run(config.limit_config(), grid, w0, B0)
    pg_norm = _l2(project_G(w0, grid), grid, K)

    if config.workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(config.workers) as ex:
            results = list(ex.map(_run_one, [config] * len(config.lambdas), config.lambdas))
    else:
        results = [_run_one(config, lam) for lam in config.lambdas]

    table = ConvergenceTable()
    trajs, failures = {}, {}
    for lam, traj, fail in results:
        if fail is not None:
            failures[lam] = fail
            continue
        trajs[lam] = traj
        metrics = compare_to_limit(traj, limit, K, law=law)
        for row in metrics:
            i = traj.index_of(row["t"])
            u, rate = traj.states[i], traj.rates[i]
            ssw, ssu = _ss_terms(u, rate, grid, lam)
            table.add(
                lam=lam,
                t=row["t"],
                err_v=row["err_v"],
                err_q=row["err_q"],
                err_H=row["err_H"],
                norm_ss_lambda=ssw,
                norm_ss_unweighted=ssu,
                wp_metric=wp_metric(u, grid, lam),
                divH=traj.diagnostics["divH"][i],
                energy_residual=traj.diagnostics["energy_residual"][i],
                grad_q_err=row["grad_q_err"],
            )
    layer = None
    if table.rows:
        try:
            layer = detect_initial_layer(table, config.layer_split)
        except ValueError:
            layer = None
    table.meta = {
        "config_sha256": config.digest(),
        "config": config.canonical(),
        "eos": law.tag,
        "sigma": grid.sigma_params,
        "grid": {"n1": grid.n1, "n2": grid.n2, "L1": grid.L1, "L2": grid.L2},
        "subdomain": [list(r) for r in K],
        "pg_norm_K": pg_norm,
        "failures": {repr(k): v for k, v in failures.items()},
        "runs": {repr(k): {"steps": t.meta.get("steps"), "divH_pre_clean_max": t.meta.get("divH_pre_clean_max")} for k, t in trajs.items()},
        "columns": list(COLUMNS),
    }
    result = SweepResult(table, trajs, limit, failures, pg_norm, layer)
    if config.out_dir and write is not False:
        export_sweep(result, config)
    return result


def export_sweep(result, config):
    out = config.out_dir
    os.makedirs(out, exist_ok=True)
    checkpoint.write_text(os.path.join(out, "table.csv"), result.table.to_csv())
    checkpoint.write_text(os.path.join(out, "meta.json"), checkpoint.dump_json(result.table.meta))
    if result.layer is not None:
        checkpoint.write_text(os.path.join(out, "layer.json"), checkpoint.dump_json(result.layer.to_dict()))
    if config.checkpoints:
        grid = config.grid()
        for lam, traj in result.trajectories.items():
            path = os.path.join(out, f"final_lam{lam:g}.ckpt")
            checkpoint.write_checkpoint(traj.states[-1], grid, path, time=traj.times[-1], eos=config.eos, extra={"lam": lam, "config_sha256": config.digest()})
