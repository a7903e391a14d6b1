import os
import subprocess
import sys

import numpy as np
import pytest

from lowmach_mhd import kernels
from lowmach_mhd.flux import assemble_A0, full_coefficient
from lowmach_mhd.state import EXP_LAW, HyperbolicityError, q_to_p

from conftest import random_state


def _backends():
    out = ["python"]
    try:
        kernels.get_backend("cython")
        out.append("cython")
    except ImportError:
        pass
    return out


def _inputs(rng, lam, shape=(9, 6)):
    u = random_state(rng, shape, lam)
    d1 = rng.normal(size=u.shape)
    d2 = rng.normal(size=u.shape)
    p = q_to_p(u[0], u[4:7], lam)
    rho = EXP_LAW.rho(p)
    a = EXP_LAW.ratio(p)
    return u, d1, d2, rho, a


def _dense(u, d1, d2, lam):
    A0 = assemble_A0(u, lam)
    r = np.einsum("ijab,bij->ija", full_coefficient(u, 1, lam), d1) + np.einsum("ijab,bij->ija", full_coefficient(u, 2, lam), d2)
    return -np.moveaxis(np.linalg.solve(A0, r[..., None])[..., 0], -1, 0)


@pytest.mark.parametrize("name", _backends())
@pytest.mark.parametrize("lam", [1.0, 8.0, 64.0])
def test_kernel_matches_dense_solve(rng, name, lam):
    u, d1, d2, rho, a = _inputs(rng, lam)
    got = kernels.get_backend(name)(u, d1, d2, rho, a, lam)
    ref = _dense(u, d1, d2, lam)
    assert np.max(np.abs(got - ref)) <= 1e-12 * lam * max(1.0, np.max(np.abs(ref)))


@pytest.mark.parametrize("name", _backends())
def test_kernel_rejects_non_positive(rng, name):
    u, d1, d2, rho, a = _inputs(rng, 2.0)
    a = a.copy()
    a[3, 2] = -1.0
    with pytest.raises(HyperbolicityError):
        kernels.get_backend(name)(u, d1, d2, rho, a, 2.0)


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


def test_pure_env_forces_fallback():
    env = dict(os.environ, LOWMACH_MHD_PURE="1")
    out = subprocess.run([sys.executable, "-c", "import lowmach_mhd; print(lowmach_mhd.BACKEND)"], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
