"""Command-line entry point: ``lowmach-mhd <command> [--config PATH] [--out DIR] ...``."""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import acoustic, checkpoint, compressible, harness, incompressible
from .compressible import BlowUpError
from .harness import ConfigError
from .helmholtz import project_S
from .norms import NormSpec, norm_property_battery, norm_spatial
from .state import law_from_tag, make_initial_data

EXIT_OK = 0
EXIT_BLOWUP = 2
EXIT_CONFIG = 3


def _lambda_list(text):
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad lambda list {text!r}") from exc


def _load(args):
    overrides = {}
    if args.lam is not None:
        overrides["lambdas"] = args.lam
    if args.out is not None:
        overrides["out_dir"] = args.out
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.config is None:
        return harness.parse_config("", overrides)
    return harness.load_config(args.config, overrides)


def _emit(out_dir, name, text):
    if out_dir:
        checkpoint.write_text(os.path.join(out_dir, name), text)
    else:
        sys.stdout.write(text)


def cmd_simulate(args):
    cfg = _load(args)
    grid = cfg.grid()
    law = law_from_tag(cfg.eos)
    lam = cfg.lambdas[0]
    u0 = make_initial_data(cfg.family, grid, lam, law)
    try:
        traj = compressible.run(cfg.solver_config(lam), grid, u0, law=law)
        status = EXIT_OK
    except BlowUpError as exc:
        print(f"blow-up: {exc}", file=sys.stderr)
        traj, status = exc.trajectory, EXIT_BLOWUP
    rows = [(t, traj.diagnostics["divH"][i], traj.diagnostics["energy_residual"][i], traj.diagnostics["p_max"][i]) for i, t in enumerate(traj.times)]
    _emit(cfg.out_dir, "diagnostics.csv", checkpoint.table_to_csv(("t", "divH", "energy_residual", "p_max"), rows))
    if cfg.out_dir and len(traj):
        for i, t in enumerate(traj.times):
            checkpoint.write_checkpoint(traj.states[i], grid, os.path.join(cfg.out_dir, f"state_{i:04d}.ckpt"), time=t, eos=cfg.eos, extra={"lam": lam})
    return status


def cmd_limit(args):
    cfg = _load(args)
    grid = cfg.grid()
    w0, B0 = harness.limit_initial(cfg, grid)
    traj = incompressible.run(cfg.limit_config(), grid, w0, B0)
    rows = [(t, traj.diagnostics["divw"][i], traj.diagnostics["divB"][i]) for i, t in enumerate(traj.times)]
    _emit(cfg.out_dir, "limit.csv", checkpoint.table_to_csv(("t", "divw", "divB"), rows))
    if cfg.out_dir:
        for i, t in enumerate(traj.times):
            # slot 0 carries the total pressure of the limit state
            u = np.concatenate([traj.meta["pressure"][i][None], traj.states[i]])
            checkpoint.write_checkpoint(u, grid, os.path.join(cfg.out_dir, f"limit_{i:04d}.ckpt"), time=t, eos=cfg.eos, extra={"lam": 1.0, "kind": "limit"})
    return EXIT_OK


def cmd_sweep(args):
    cfg = _load(args)
    res = harness.run_sweep(cfg)
    if not cfg.out_dir:
        sys.stdout.write(res.table.to_csv())
    for lam, f in res.failures.items():
        print(f"lam={lam:g}: blow-up at t={f['time']:.6g}", file=sys.stderr)
    if res.failures and not res.trajectories:
        return EXIT_BLOWUP
    return EXIT_OK


def cmd_norms(args):
    try:
        state, grid, meta = checkpoint.read_checkpoint(args.checkpoint)
    except (OSError, checkpoint.CheckpointError) as exc:
        print(f"cannot read checkpoint: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    sub = None
    if args.subdomain:
        s = [float(x) for x in args.subdomain.split(",")]
        if len(s) != 4:
            print("subdomain needs four numbers", file=sys.stderr)
            return EXIT_CONFIG
        sub = ((s[0], s[1]), (s[2], s[3]))
    try:
        spec = NormSpec(args.family, args.m, subdomain=sub)
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    rep = norm_spatial(state.data, spec, grid)
    _emit(args.out, "norms.json", rep.to_json() + "\n")
    return EXIT_OK


def cmd_acoustic(args):
    cfg = _load(args)
    grid = cfg.grid()
    law = law_from_tag(cfg.eos)
    q0, v0 = acoustic.gradient_pulse(grid)
    K = ((0.0, 0.5 * grid.L1), (0.25 * grid.L2, 0.75 * grid.L2))
    c = np.sqrt(law.mu1 * law.mu2)
    rows = []
    e0 = acoustic.local_energy(q0, v0, grid, K, law.mu1, law.mu2)
    ps0 = project_S(v0, grid)
    for lam in cfg.lambdas:
        # sample up to the first far-wall return L1 / (lam c)
        for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
            t = frac * grid.L1 / (lam * c)
            q, v = acoustic.evolve(q0, v0, t, grid, lam, law.mu1, law.mu2)
            e = acoustic.local_energy(q, v, grid, K, law.mu1, law.mu2)
            drift = float(np.max(np.abs(project_S(v, grid) - ps0)))
            rows.append((lam, t, e, e / e0, drift))
    _emit(cfg.out_dir, "acoustic.csv", checkpoint.table_to_csv(("lam", "t", "energy_K", "fraction", "ps_drift"), rows))
    return EXIT_OK


def cmd_battery(args):
    rep = norm_property_battery(m=args.m)
    _emit(args.out, "battery.json", json.dumps(rep, sort_keys=True, indent=2) + "\n")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="lowmach-mhd", description="Low-Mach MHD singular-limit laboratory")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="INI configuration file")
        sp.add_argument("--out", help="output directory (stdout when omitted)")
        sp.add_argument("--lambda", dest="lam", type=_lambda_list, help="comma-separated lambda list")
        sp.add_argument("--seed", type=int, help="data-family randomisation seed")

    for name, fn, hlp in (
        ("simulate", cmd_simulate, "one compressible run (first lambda)"),
        ("limit", cmd_limit, "incompressible limit run"),
        ("sweep", cmd_sweep, "lambda sweep against the limit"),
        ("acoustic", cmd_acoustic, "linear acoustic layer study"),
    ):
        sp = sub.add_parser(name, help=hlp)
        common(sp)
        sp.set_defaults(func=fn)
    sp = sub.add_parser("norms", help="norm report of a checkpoint")
    sp.add_argument("checkpoint")
    sp.add_argument("--family", default="star2", choices=("star", "star2", "star3"))
    sp.add_argument("--m", type=int, default=2)
    sp.add_argument("--subdomain", help="x1a,x1b,x2a,x2b")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_norms)
    sp = sub.add_parser("battery", help="conormal norm property battery")
    sp.add_argument("--m", type=int, default=2)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_battery)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
