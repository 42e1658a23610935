"""Solvers for the nonlinear Schrodinger / Gross-Pitaevskii equation."""

from .core import (BC, Axis, Damping, Grid, ModelParams, Nonlinearity, Potential, WaveField,
                   bright_soliton, build_grid, dispersion_omega, eval_G, soliton_energy,
                   soliton_mass)
from .linsolve import FixedPointPolicy
from .schemes import SCHEMES, Stepper, make_state, step

__version__ = "0.1.0"

__all__ = [
    "BC", "Axis", "Damping", "Grid", "ModelParams", "Nonlinearity", "Potential", "WaveField",
    "bright_soliton", "build_grid", "dispersion_omega", "eval_G", "soliton_energy",
    "soliton_mass", "FixedPointPolicy", "SCHEMES", "Stepper", "make_state", "step",
]
