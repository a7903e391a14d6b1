"""Time the compiled and numpy flux kernels, and a full RHS evaluation with each.

    python benchmarks/bench_kernels.py [--n1 129 --n2 64 --repeat 50]
"""
import argparse
import timeit

import numpy as np

from lowmach_mhd import build_grid
from lowmach_mhd import compressible as C
from lowmach_mhd.grid import STATE_PARITY, apply_ghost_fill, diff
from lowmach_mhd.kernels import get_backend
from lowmach_mhd.state import EXP_LAW, DataFamily, make_initial_data, q_to_p


def inputs(n1, n2, lam):
    grid = build_grid(n1, n2)
    u = make_initial_data(DataFamily(kind="ill_prepared", amp_phi=0.002), grid, lam).data
    p = q_to_p(u[0], u[4:7], lam)
    rho = np.ascontiguousarray(EXP_LAW.rho(p))
    a = np.ascontiguousarray(EXP_LAW.ratio(p))
    padded = apply_ghost_fill(u, grid, STATE_PARITY)
    g, h = grid.ghost, grid.dx1
    d1 = (padded[:, g - 2 : g - 2 + n1] - 8 * padded[:, g - 1 : g - 1 + n1] + 8 * padded[:, g + 1 : g + 1 + n1] - padded[:, g + 2 : g + 2 + n1]) / (12 * h)
    d2 = diff(u, 2, grid)
    return grid, u, np.ascontiguousarray(d1), np.ascontiguousarray(d2), rho, a


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--n1", type=int, default=129)
    ap.add_argument("--n2", type=int, default=64)
    ap.add_argument("--lam", type=float, default=16.0)
    ap.add_argument("--repeat", type=int, default=50)
    args = ap.parse_args(argv)
    grid, u, d1, d2, rho, a = inputs(args.n1, args.n2, args.lam)
    res = {}
    for name in ("python", "cython"):
        try:
            k = get_backend(name)
        except ImportError:
            print(f"{name:7s} unavailable")
            continue
        res[name] = k(u, d1, d2, rho, a, args.lam)
        t_k = min(timeit.repeat(lambda: k(u, d1, d2, rho, a, args.lam), number=args.repeat, repeat=3)) / args.repeat
        t_r = min(timeit.repeat(lambda: C.rhs(u, grid, args.lam, 0.02, flux_kernel=k), number=args.repeat, repeat=3)) / args.repeat
        nodes = args.n1 * args.n2
        print(f"{name:7s} kernel {t_k * 1e3:8.3f} ms ({t_k / nodes * 1e9:6.1f} ns/node)   rhs {t_r * 1e3:8.3f} ms")
    if len(res) == 2:
        print(f"max |cython - python| = {np.max(np.abs(res['cython'] - res['python'])):.2e}")


if __name__ == "__main__":
    main()
