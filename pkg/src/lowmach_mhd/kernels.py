"""Backend selection for the nodewise flux kernel.

The compiled extension is used when importable; set ``LOWMACH_MHD_PURE=1``
to force the numpy fallback.
"""
from __future__ import annotations

import os

from . import _kernels_py

BACKEND = "python"
flux_tendency = _kernels_py.flux_tendency

if os.environ.get("LOWMACH_MHD_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # pragma: no cover - depends on build
        _compiled = None
    if _compiled is not None:
        BACKEND = "cython"
        flux_tendency = _compiled.flux_tendency


def get_backend(name):
    """Return the kernel function for ``"python"`` or ``"cython"``."""
    if name == "python":
        return _kernels_py.flux_tendency
    if name == "cython":
        from . import _kernels

        return _kernels.flux_tendency
    raise ValueError(f"unknown backend {name!r}")
