"""Spherical conformal parametrization of genus-zero meshes by conformalized mean curvature flow."""

__version__ = "0.1.0"

from .fem import assemble_mass, assemble_mass_galerkin, assemble_mass_lumped, assemble_stiffness
from .flow import FlowConfig, FlowResult, Mode, Termination, run_flow
from .io import load_mesh, save_obj
from .mesh import TriangleMesh, validate_closed_genus_zero
from .metrics import ConformalityReport, sphericity, summarize

__all__ = [
    "ConformalityReport",
    "FlowConfig",
    "FlowResult",
    "Mode",
    "Termination",
    "TriangleMesh",
    "assemble_mass",
    "assemble_mass_galerkin",
    "assemble_mass_lumped",
    "assemble_stiffness",
    "load_mesh",
    "run_flow",
    "save_obj",
    "sphericity",
    "summarize",
    "validate_closed_genus_zero",
]
