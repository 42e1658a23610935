"""Model extensions: damping, rotation and two-component coupling."""

from .coupled import CoupledField, CoupledState, coupled_mass, coupled_tssp_step, make_coupled_state
from .damping import (DampingKind, damped_density, damped_phase_integral, damped_phase_substep,
                      damped_tssp_step)
from .rotation import (RotationFrame, RotatingState, lagrangian_rotating_step, lagrangian_to_eulerian,
                       make_rotating_state, rotated_harmonic_integral, rotation_adi_step,
                       rotation_matrix)

__all__ = [
    "CoupledField", "CoupledState", "coupled_mass", "coupled_tssp_step", "make_coupled_state",
    "DampingKind", "damped_density", "damped_phase_integral", "damped_phase_substep",
    "damped_tssp_step",
    "RotationFrame", "RotatingState", "lagrangian_rotating_step", "lagrangian_to_eulerian",
    "make_rotating_state", "rotated_harmonic_integral", "rotation_adi_step", "rotation_matrix",
]
