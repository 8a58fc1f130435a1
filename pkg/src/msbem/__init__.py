"""Boundary element solver for acoustic scattering at multi-screens.

Screens made of several flat sheets joined along junction lines are
discretized panel by panel as a multi-trace product space; first-kind
single-layer and hypersingular operators are assembled with singular
triangle-pair quadrature, preconditioned by block-diagonal opposite-order
operators through duality Gram matrices, and solved by GMRES. DoF
reduction strategies shrink the redundant multi-trace basis while keeping
the radiated field.
"""

from .errors import (ConvergenceError, DimensionBudgetError,
                     EmptySpaceError, MeshInvariantError, QuadratureError,
                     ReductionError)
from .geometry import (MultiScreen, PanelMesh, TriMesh, barycentric_refine,
                       dual_cells, export_screen, import_screen,
                       make_junction_screen, make_screen, make_typeB_screen,
                       read_off, submesh, write_off)
from .quadrature import QuadratureConfig, triangle_rule
from .spaces import (FULL, FunctionSpace, ReductionStrategy, SpaceBlock,
                     continuous_p1_space, dual_constant_space,
                     dual_p1_space, expected_nullity, multitrace_space,
                     problem_spaces, pw_constant_space, singletrace_basis)
from .assembly import (GalerkinMatrix, IncidentWave, KernelConfig,
                       assemble_duality, assemble_hypersingular,
                       assemble_rhs, assemble_single_layer, build_scene,
                       eval_potential)
from .solver import (AssemblyCache, SolveConfig, SolveReport,
                     effective_condition_number, gmres,
                     make_calderon_preconditioner, solve_dirichlet,
                     solve_neumann)
from .potentials_excitation import (ProbeSet, default_probes, plane_wave,
                                    plane_wave_traces, scattered_field,
                                    total_field)

__version__ = "0.1.0"

__all__ = [
    "AssemblyCache", "ConvergenceError", "DimensionBudgetError",
    "EmptySpaceError", "FULL", "FunctionSpace", "GalerkinMatrix",
    "IncidentWave", "KernelConfig", "MeshInvariantError", "MultiScreen",
    "PanelMesh", "ProbeSet", "QuadratureConfig", "QuadratureError",
    "ReductionError", "ReductionStrategy", "SolveConfig", "SolveReport",
    "SpaceBlock", "TriMesh", "assemble_duality", "assemble_hypersingular",
    "assemble_rhs", "assemble_single_layer", "barycentric_refine",
    "build_scene", "continuous_p1_space", "default_probes", "dual_cells",
    "dual_constant_space", "dual_p1_space", "effective_condition_number",
    "eval_potential", "expected_nullity", "export_screen", "gmres",
    "import_screen", "make_calderon_preconditioner", "make_junction_screen",
    "make_screen", "make_typeB_screen", "multitrace_space", "plane_wave",
    "plane_wave_traces", "problem_spaces", "pw_constant_space", "read_off",
    "scattered_field", "singletrace_basis", "solve_dirichlet",
    "solve_neumann", "submesh", "total_field", "triangle_rule", "write_off",
]
