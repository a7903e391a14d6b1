"""Acceptance criteria AC-1..AC-9 at the default experiment scale (129x64, T = 0.5, lambda in {4, 8, 16, 32}).

Each test logs one PASS/FAIL line with the measured numbers.  Tolerances are
pinned here; the two lambda sweeps are run once per session.
"""
import filecmp
import os
from pathlib import Path

import numpy as np
import pytest

from lowmach_mhd import build_grid, cli
from lowmach_mhd import compressible as C
from lowmach_mhd import harness as Hn
from lowmach_mhd.acoustic import AcousticMode, gradient_pulse, local_energy, modal_solution, run_linear
from lowmach_mhd.checkpoint import encode, read_checkpoint
from lowmach_mhd.flux import assemble_A0, assemble_Aj, full_coefficient
from lowmach_mhd.helmholtz import inner, project_G, project_S
from lowmach_mhd.norms import FAMILIES, NormSpec, norm_property_battery, norm_spatial
from lowmach_mhd.state import make_initial_data

from conftest import record

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
LAMS = (4.0, 8.0, 16.0, 32.0)

# pinned tolerances
SYM_TOL = 1e-12
A1_TOL = 1e-12
SCALE_TOL = 1e-12
ORDER_MIN = 2.95  # observed orders are quoted to two significant digits
ENERGY_TOL = 1e-3
DIVH_TOL = 1e-7
NORM_SPREAD = 2.0
LATE_RATIO = 0.5
EARLY_FRACTION = 0.5
WP_SPREAD = 2.0
GRADQ_RATIO = 0.6
PROJ_TOL = 1e-8
POISSON_ORDER = 3.9
BATTERY_CHANGE = 0.10
BATTERY_BOUND = 10.0
ACOUSTIC_LOSS = 0.5
PS_TOL = 1e-12


@pytest.fixture(scope="session")
def well():
    return Hn.run_sweep(Hn.load_config(CONFIGS / "well_prepared.ini"))


@pytest.fixture(scope="session")
def ill():
    return Hn.run_sweep(Hn.load_config(CONFIGS / "ill_prepared.ini"))


def _rel_asym(A):
    return np.max(np.abs(A - np.swapaxes(A, -1, -2))) / max(np.max(np.abs(A)), 1e-300)


def test_ac1_structure():
    rng = np.random.default_rng(2024)
    sym = a1 = inv = 0.0
    min_eig = np.inf
    for _ in range(1000):
        lam = float(rng.uniform(1.0, 100.0))
        u = rng.normal(scale=0.5, size=(7, 3, 2))
        u[0] *= lam
        u[4:7] *= np.sqrt(lam)
        u[1, [0, -1]] = 0.0
        u[4, [0, -1]] = 0.0
        A0 = assemble_A0(u, lam)
        sym = max(sym, _rel_asym(A0), *(_rel_asym(full_coefficient(u, j, lam)) for j in (1, 2, 3)))
        min_eig = min(min_eig, float(np.min(np.linalg.eigvalsh(A0))))
        a1 = max(a1, float(np.max(np.abs(assemble_Aj(u, 1, lam)[[0, -1]]))))
        c = float(rng.uniform(0.1, 10.0))
        inv = max(inv, float(np.max(np.abs(assemble_A0(c * u, c * lam) - A0))))
    ok = sym <= SYM_TOL and min_eig > 0 and a1 <= A1_TOL and inv <= SCALE_TOL
    record("AC-1", ok, f"asym={sym:.2e} min_eig(A0)={min_eig:.3e} |A1|_wall={a1:.1e} scale_inv={inv:.2e}")
    assert ok


def _modal_error(n1, n2, cfl, wavenumbers, lam=4.0, amp=1e-6, T=0.25):
    g = build_grid(n1, n2)
    mode = AcousticMode(1, 1, amp, lam)
    q, v = modal_solution(mode, 0.0, g, wavenumbers)
    u = np.zeros((7, n1, n2))
    u[0], u[1:4] = q, v
    nst = int(np.ceil(T / (cfl * min(g.dx1, g.dx2) / C.wave_speed(u, lam))))
    dt = T / nst
    L = lambda x: C.rhs(x, g, lam, 0.0)
    for _ in range(nst):
        u, _ = C.step_ssprk3(u, dt, L)
    qe, ve = modal_solution(mode, T, g, wavenumbers)
    e = u.copy()
    e[0] -= qe
    e[1:4] -= ve
    return float(np.sqrt(np.sum(g.integrate(e * e)))) / amp


@pytest.mark.slow
def test_ac2_solver_verification():
    # time refinement on a fixed grid against the semi-discrete modal solution
    et = np.array([_modal_error(65, 32, c, "discrete") for c in (0.8, 0.4, 0.2)])
    pt = np.log2(et[:-1] / et[1:])
    # simultaneous dx, dt refinement against the continuous mode
    ex = np.array([_modal_error(n, (n - 1) // 2, 0.8, "continuous") for n in (17, 33, 65, 129)])
    px = np.log2(ex[:-1] / ex[1:])
    # default smooth run: well-prepared defaults, lambda = 8, T = 0.5, 129x64
    cfg = Hn.parse_config("")
    g = cfg.grid()
    tr = C.run(C.SolverConfig(lam=8.0, T=cfg.T), g, make_initial_data(cfg.family, g, 8.0))
    eres = max(tr.diagnostics["energy_residual"])
    dh = max(tr.diagnostics["divH"])
    ok = bool(np.all(pt >= ORDER_MIN) and np.all(px >= ORDER_MIN) and eres <= ENERGY_TOL and dh <= DIVH_TOL)
    record(
        "AC-2",
        ok,
        f"dt orders={np.round(pt, 3).tolist()} dx+dt orders={np.round(px, 3).tolist()} "
        f"energy_residual={eres:.2e} divH={dh:.1e}",
    )
    assert ok


@pytest.mark.slow
def test_ac3_uniform_estimate(ill):
    t = ill.table
    weighted = [t.column("norm_ss_lambda", l).max() for l in LAMS]
    raw = [float(t.column("norm_ss_unweighted", l).max()) for l in LAMS]
    spread = max(weighted) / min(weighted)
    grows = all(b > a for a, b in zip(raw, raw[1:]))
    dh = float(t.column("divH").max())
    pre = max(r["divH_pre_clean_max"] for r in t.meta["runs"].values())
    ok = spread <= NORM_SPREAD and grows and dh <= DIVH_TOL and not ill.failures
    record(
        "AC-3",
        ok,
        f"weighted spread={spread:.3f} unweighted={[round(x, 1) for x in raw]} divH max={dh:.1e} "
        f"(largest intra-step value before cleaning {pre:.1e})",
    )
    assert ok


@pytest.mark.slow
def test_ac4_initial_layer(ill):
    rep = ill.layer.per_lambda
    late = [rep[l]["e_late"] for l in LAMS]
    early = [rep[l]["e_early"] for l in LAMS]
    eH = [ill.table.value("err_H", l, 0.25) for l in LAMS]
    pg = ill.pg_norm
    ok = (
        all(b < a for a, b in zip(late, late[1:]))
        and late[-1] <= LATE_RATIO * late[0]
        and min(early) >= EARLY_FRACTION * pg
        and all(b < a for a, b in zip(eH, eH[1:]))
    )
    record(
        "AC-4",
        ok,
        f"e_late={[f'{x:.4g}' for x in late]} e_early/|P_G w0|={min(early) / pg:.3f} err_H(T/2)={[f'{x:.3g}' for x in eH]}",
    )
    assert ok


@pytest.mark.slow
def test_ac5_well_prepared(well):
    t = well.table
    wp = [t.column("wp_metric", l).max() for l in LAMS]
    ev = [t.column("err_v", l).max() for l in LAMS]
    gq = [t.value("grad_q_err", l, 0.25) for l in LAMS]
    ok = (
        max(wp) / min(wp) <= WP_SPREAD
        and all(b < a for a, b in zip(ev, ev[1:]))
        and all(b < a for a, b in zip(gq, gq[1:]))
        and gq[3] <= GRADQ_RATIO * gq[1]
        and not well.failures
    )
    record(
        "AC-5",
        ok,
        f"wp spread={max(wp) / min(wp):.3f} max err_v={[f'{x:.3g}' for x in ev]} grad_q_err(T/2)={[f'{x:.3g}' for x in gq]}",
    )
    assert ok


def _poisson_orders():
    from lowmach_mhd.helmholtz import PoissonProblem, solve_poisson_neumann

    errs = []
    for n in (17, 33, 65, 129):
        g = build_grid(n, n - 1)
        X1, X2 = g.mesh()
        phi = np.cos(np.pi * X1) * np.cos(2 * np.pi * X2) + 0.5 * np.cos(2 * np.pi * X1) * np.sin(4 * np.pi * X2)
        rhs = -5 * np.pi**2 * np.cos(np.pi * X1) * np.cos(2 * np.pi * X2) - 0.5 * 20 * np.pi**2 * np.cos(2 * np.pi * X1) * np.sin(4 * np.pi * X2)
        phi -= g.integrate(phi) / (g.L1 * g.L2)
        sol = solve_poisson_neumann(PoissonProblem(rhs, tol=1e-6), g)
        errs.append(np.max(np.abs(sol - phi)))
    e = np.array(errs)
    return np.log2(e[:-1] / e[1:])


def test_ac6_helmholtz():
    rng = np.random.default_rng(6)
    g = build_grid(65, 32)
    idem = comp = orth = 0.0
    for _ in range(100):
        v = rng.normal(size=(3, g.n1, g.n2))
        v[0, [0, -1]] = 0.0
        vn = np.sqrt(inner(v, v, g))
        G = project_G(v, g)
        S = project_S(v, g)
        idem = max(idem, np.sqrt(inner(project_G(G, g) - G, project_G(G, g) - G, g)) / vn)
        comp = max(comp, np.sqrt(inner(G + S - v, G + S - v, g)) / vn)
        orth = max(orth, abs(inner(G, S, g)) / vn**2)
    orders = _poisson_orders()
    ok = idem <= PROJ_TOL and comp <= PROJ_TOL and orth <= PROJ_TOL and np.all(orders >= POISSON_ORDER)
    record("AC-6", ok, f"idempotence={idem:.1e} complementarity={comp:.1e} orthogonality={orth:.1e} poisson orders={np.round(orders, 3).tolist()}")
    assert ok


def test_ac7_norms():
    rng = np.random.default_rng(7)
    g = build_grid(33, 16)
    hom = tri = 0.0
    chain = True
    for _ in range(100):
        u = rng.normal(size=g.shape)
        w = rng.normal(size=g.shape)
        c = float(rng.normal())
        spec = NormSpec("star2", 2)
        nu = norm_spatial(u, spec, g).total
        hom = max(hom, abs(norm_spatial(c * u, spec, g).total - abs(c) * nu) / (abs(c) * nu))
        tri = max(tri, norm_spatial(u + w, spec, g).total - nu - norm_spatial(w, spec, g).total)
        reps = [norm_spatial(u, NormSpec(f, 2), g) for f in FAMILIES]
        for lo, hi in zip(reps, reps[1:]):
            chain &= all(hi.terms.get(k) == v for k, v in lo.terms.items()) and lo.total <= hi.total
    bat = norm_property_battery(m=2)
    sups = {k: v[-1] for k, v in bat["sup"].items()}
    ok = hom <= 1e-13 and tri <= 1e-12 and chain and max(bat["change"].values()) <= BATTERY_CHANGE and max(sups.values()) <= BATTERY_BOUND
    record(
        "AC-7",
        ok,
        f"homogeneity={hom:.1e} triangle excess={tri:.1e} chain={chain} battery sup={ {k: round(v, 4) for k, v in sups.items()} } "
        f"change={ {k: f'{v:.1e}' for k, v in bat['change'].items()} }",
    )
    assert ok


def test_ac8_acoustic_layer():
    g = build_grid(129, 64)
    q0, v0 = gradient_pulse(g)
    K = ((0.0, 0.5 * g.L1), (0.25 * g.L2, 0.75 * g.L2))
    e0 = local_energy(q0, v0, g, K)
    s0 = project_S(v0, g)
    frac = []
    drift = 0.0
    for lam in LAMS:
        t_return = g.L1 / lam  # c = 1 for the default law
        (_, q, v), = run_linear(q0, v0, lam, [t_return], g)
        frac.append(local_energy(q, v, g, K) / e0)
        drift = max(drift, float(np.max(np.abs(project_S(v, g) - s0))) / float(np.max(np.abs(v0))))
    ok = max(frac) <= 1.0 - ACOUSTIC_LOSS and drift <= PS_TOL
    record("AC-8", ok, f"retained K-energy at L1/(lam c)={[round(x, 4) for x in frac]} P_S drift={drift:.1e}")
    assert ok


SMALL = """
[grid]
n1 = 17
n2 = 8
[physics]
lambdas = 2, 4
T = 0.05
dissipation = split
[data]
kind = ill_prepared
amp_phi = 0.002
"""


def test_ac9_determinism_io(tmp_path):
    cfg = tmp_path / "small.ini"
    cfg.write_text(SMALL)
    for name in ("a", "b"):
        assert cli.main(["sweep", "--config", str(cfg), "--out", str(tmp_path / name)]) == 0
    same_csv = filecmp.cmp(tmp_path / "a" / "table.csv", tmp_path / "b" / "table.csv", shallow=False)
    same_all = all(filecmp.cmp(tmp_path / "a" / f, tmp_path / "b" / f, shallow=False) for f in os.listdir(tmp_path / "a"))
    path = tmp_path / "a" / "final_lam4.ckpt"
    state, grid, meta = read_checkpoint(path)
    extra = {"lam": state.lam, **{k[2:]: v for k, v in meta.items() if k.startswith("x.")}}
    roundtrip = encode(state, grid, meta["time"], meta["eos"], extra) == path.read_bytes()
    ok = same_csv and same_all and roundtrip
    record("AC-9", ok, f"table.csv identical={same_csv} all outputs identical={same_all} checkpoint re-encode bitwise={roundtrip}")
    assert ok
