"""Finite element solvers for the clamped biharmonic wave equation
u_tt + Delta^2 u = f with Morley, discontinuous P2 and C0 interior penalty
P2 spaces and explicit or implicit second-order time stepping."""
from .config import RunConfig
from .forms import FormParams, assemble_ah, assemble_mass
from .mesh import Mesh, build_uniform
from .spaces import Space, SpaceKind, build_space
from .timestep import Trajectory, run

__all__ = ["RunConfig", "FormParams", "assemble_ah", "assemble_mass", "Mesh", "build_uniform", "Space",
           "SpaceKind", "build_space", "Trajectory", "run"]
__version__ = "0.1.0"
