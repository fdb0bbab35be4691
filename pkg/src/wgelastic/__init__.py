"""Stabilizer-free weak Galerkin finite elements for linear elasticity on
polytopal, possibly nonconvex, meshes."""
from .analysis import (
    ConvergenceReport,
    StudyConfig,
    check_commutation,
    check_norm_equivalence,
    convergence_study,
    discrete_h1_seminorm,
    emit_table,
    energy_error,
    energy_norm,
    interpolate,
    l2_error,
)
from .linsolve import NotSPDError, SolveStats, cg_solve, dense_cholesky_solve, solve
from .polymesh import (
    GENERATORS,
    MeshError,
    PolyMesh,
    gen_kuhn_tet_grid,
    gen_nonconvex_polygon_grid,
    gen_triangular_grid,
    load_mesh,
    validate_mesh,
)
from .solutions import ExactSolution, e1_solution, e3_solution, get_solution, polynomial_solution
from .system import AssembledSystem, assemble, build_dofmap
from .weakops import local_ops, local_stiffness, select_degrees

__version__ = "0.1.0"

__all__ = [
    "assemble",
    "AssembledSystem",
    "build_dofmap",
    "cg_solve",
    "check_commutation",
    "check_norm_equivalence",
    "convergence_study",
    "ConvergenceReport",
    "dense_cholesky_solve",
    "discrete_h1_seminorm",
    "e1_solution",
    "e3_solution",
    "emit_table",
    "energy_error",
    "energy_norm",
    "ExactSolution",
    "gen_kuhn_tet_grid",
    "gen_nonconvex_polygon_grid",
    "gen_triangular_grid",
    "GENERATORS",
    "get_solution",
    "interpolate",
    "l2_error",
    "load_mesh",
    "local_ops",
    "local_stiffness",
    "MeshError",
    "NotSPDError",
    "PolyMesh",
    "polynomial_solution",
    "select_degrees",
    "solve",
    "SolveStats",
    "StudyConfig",
    "validate_mesh",
]
