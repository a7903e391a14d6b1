import numpy as np
import pytest

from lowmach_mhd import build_grid


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def grid():
    return build_grid(33, 16)


def random_state(rng, shape, lam, wall=True, scale=0.3):
    """Random admissible 7-component field; odd components vanish on the first/last x1 row when ``wall``."""
    u = rng.normal(scale=scale, size=(7,) + shape)
    u[0] *= lam
    if wall:
        u[1, [0, -1]] = 0.0
        u[4, [0, -1]] = 0.0
    return u


def smooth_vector(rng, grid, nmodes=3):
    """Random smooth (v1, v2, v3) with v1 = 0 on both walls."""
    X1, X2 = grid.mesh()
    v = np.zeros((3, grid.n1, grid.n2))
    for _ in range(nmodes):
        a, b, c = rng.normal(size=3)
        m1 = rng.integers(1, 4)
        m2 = rng.integers(0, 3)
        ph = rng.uniform(0, 2 * np.pi)
        k1, k2 = np.pi * m1 / grid.L1, 2 * np.pi * m2 / grid.L2
        v[0] += a * np.sin(k1 * X1) * np.cos(k2 * X2 + ph)
        v[1] += b * np.cos(k1 * X1) * np.sin(k2 * X2 + ph)
        v[2] += c * np.cos(k1 * X1) * np.cos(k2 * X2 + ph)
    v[0, [0, -1]] = 0.0
    return v


ACCEPTANCE_LINES = []


def record(criterion, ok, detail):
    """Log one acceptance line; shown in the terminal summary whatever the capture mode."""
    line = f"{criterion} {'PASS' if ok else 'FAIL'}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[0][3:])):
            terminalreporter.write_line(line)
