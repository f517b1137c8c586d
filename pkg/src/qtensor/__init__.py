"""Finite element gradient flow of the Landau-de Gennes Q-tensor energy."""

from .config import RunConfig, build_config, read_config_file
from .diagnostics import EnergyRecord, EocTable, defect_field, energy, eoc, max_principle_monitor, numerical_dissipation
from .errors import InvalidArgument, SolverError
from .experiments import RunOutput, init_defects, init_eoc, init_random3d, run_experiment, simulate
from .fem import P1Space, SparseOperator, TensorField, assemble_mass, assemble_stiffness, assemble_weighted, solve
from .mesh import Mesh, box_mesh, rect_mesh
from .potential import PotentialParams, stability_bounds
from .schemes import BoundaryCondition, SchemeConfig, StepReport, Stepper, step_od1d, step_od2c, step_ues1d
from .tensor_core import QTensor, eig_sym3, lower_triangular, make_traceless, uniaxial
from .vtk import read_vtk, write_vtk

__version__ = "0.1.0"

__all__ = [
    "BoundaryCondition",
    "EnergyRecord",
    "EocTable",
    "InvalidArgument",
    "Mesh",
    "P1Space",
    "PotentialParams",
    "QTensor",
    "RunConfig",
    "RunOutput",
    "SchemeConfig",
    "SolverError",
    "SparseOperator",
    "StepReport",
    "Stepper",
    "TensorField",
    "assemble_mass",
    "assemble_stiffness",
    "assemble_weighted",
    "box_mesh",
    "build_config",
    "defect_field",
    "eig_sym3",
    "energy",
    "eoc",
    "init_defects",
    "init_eoc",
    "init_random3d",
    "lower_triangular",
    "make_traceless",
    "max_principle_monitor",
    "numerical_dissipation",
    "read_config_file",
    "read_vtk",
    "rect_mesh",
    "run_experiment",
    "simulate",
    "solve",
    "stability_bounds",
    "step_od1d",
    "step_od2c",
    "step_ues1d",
    "uniaxial",
    "write_vtk",
]
