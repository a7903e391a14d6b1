"""Finite-difference laboratory for the low-Mach-number limit of ideal MHD in a walled slab."""
from .grid import Grid, ParityTable, build_grid, conormal_diff, diff, apply_ghost_fill
from .state import DataFamily, EXP_LAW, HyperbolicityError, MaterialLaw, StateField, eos, make_initial_data
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "DataFamily",
    "EXP_LAW",
    "Grid",
    "HyperbolicityError",
    "MaterialLaw",
    "ParityTable",
    "StateField",
    "apply_ghost_fill",
    "build_grid",
    "conormal_diff",
    "diff",
    "eos",
    "make_initial_data",
]
