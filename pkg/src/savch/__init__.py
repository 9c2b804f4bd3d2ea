"""Linear, energy-stable SAV finite-element solver for the Cahn-Hilliard equation."""
from .errors import (
    DegenerateStepError,
    InvalidParameterError,
    NumericalDomainError,
    SavError,
    SolverError,
)
from .mesh import Mesh, build_unit_square_mesh, element_geometry
from .sav import PotentialSpec, SchemeConfig, State, run, sav_step

__all__ = [
    "DegenerateStepError",
    "InvalidParameterError",
    "Mesh",
    "NumericalDomainError",
    "PotentialSpec",
    "SavError",
    "SchemeConfig",
    "SolverError",
    "State",
    "build_unit_square_mesh",
    "element_geometry",
    "run",
    "sav_step",
]
