import numpy as np
import pytest

from lowmach_mhd import build_grid
from lowmach_mhd.acoustic import (
    AcousticMode,
    evolve,
    gradient_pulse,
    linear_rhs,
    local_energy,
    modal_solution,
    residual_terms,
    run_linear,
)
from lowmach_mhd.helmholtz import project_S
from lowmach_mhd.state import StateField


def test_mode_validation():
    with pytest.raises(ValueError):
        AcousticMode(0, 0)
    with pytest.raises(ValueError):
        AcousticMode(-1, 2)


def test_discrete_mode_solves_semi_discrete_system(grid):
    mode = AcousticMode(2, 1, lam=8.0)
    t, h = 0.013, 1e-6
    q, v = modal_solution(mode, t, grid, "discrete")
    qp, vp = modal_solution(mode, t + h, grid, "discrete")
    qm, vm = modal_solution(mode, t - h, grid, "discrete")
    dq, dv = linear_rhs(q, v, grid, 8.0)
    assert np.max(np.abs((qp - qm) / (2 * h) - dq)) < 1e-6 * np.max(np.abs(dq))
    assert np.max(np.abs((vp - vm) / (2 * h) - dv)) < 1e-6 * np.max(np.abs(dv))


def test_evolve_reproduces_modal_solution(grid):
    mode = AcousticMode(3, 2, amplitude=0.7, lam=5.0)
    q0, v0 = modal_solution(mode, 0.0, grid, "discrete")
    for t in (0.01, 0.1, 0.37):
        q, v = evolve(q0, v0, t, grid, 5.0)
        qe, ve = modal_solution(mode, t, grid, "discrete")
        assert np.max(np.abs(q - qe)) < 1e-12
        assert np.max(np.abs(v - ve)) < 1e-12


def test_evolve_conserves_energy_and_solenoidal_part(grid):
    q0, v0 = gradient_pulse(grid)
    rng = np.random.default_rng(3)
    v0[1] += 0.1 * np.cos(2 * np.pi * grid.mesh()[1]) * rng.normal()
    e0 = local_energy(q0, v0, grid)
    s0 = project_S(v0, grid)
    for t, q, v in run_linear(q0, v0, 10.0, [0.01, 0.05, 0.2], grid):
        assert local_energy(q, v, grid) == pytest.approx(e0, rel=1e-11)
        assert np.max(np.abs(project_S(v, grid) - s0)) < 1e-12


def test_evolve_requires_wall_condition(grid):
    q0, v0 = gradient_pulse(grid)
    v0[0, 0] = 1.0
    with pytest.raises(ValueError):
        evolve(q0, v0, 0.1, grid, 1.0)


def test_residual_terms_vanish_at_rest(grid):
    s = StateField.zeros(grid, 4.0)
    G0, G = residual_terms(s, s.copy(), grid)
    assert np.all(G0 == 0) and np.all(G == 0)
    with pytest.raises(ValueError):
        residual_terms(s, None, grid)


def test_pulse_is_compact_gradient():
    g = build_grid(65, 64)
    q, v = gradient_pulse(g, radius=0.1)
    assert np.all(q == 0)
    far = np.hypot(*(np.stack(g.mesh()) - np.array([0.25, 0.5])[:, None, None])) > 0.1
    assert np.all(v[:, far] == 0)
    assert np.max(np.abs(project_S(v, g))) < 0.02 * np.max(np.abs(v))
