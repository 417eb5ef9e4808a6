"""Numerical core: N coupled driven Duffing oscillators under Lindblad dynamics."""

from .hamiltonian import (
    build_drive_hamiltonian,
    build_static_hamiltonian,
    collapse_ops,
    ladder_ops,
    lindblad_rhs,
)
from .model import (
    DeviceModel,
    DriveTerm,
    SolverSettings,
    Trajectory,
    basis_state,
    check_density_matrix,
    ground_state,
    hz_to_rad_per_ns,
    reduced_populations,
)
from .solver import evolve

__all__ = [
    "DeviceModel",
    "DriveTerm",
    "SolverSettings",
    "Trajectory",
    "basis_state",
    "build_drive_hamiltonian",
    "build_static_hamiltonian",
    "check_density_matrix",
    "collapse_ops",
    "evolve",
    "ground_state",
    "hz_to_rad_per_ns",
    "ladder_ops",
    "lindblad_rhs",
    "reduced_populations",
]
