"""
Mesh families and their self-checks
===================================

Three mesh families ship with the package: uniform triangles, a grid of
nonconvex pentagons and Kuhn tetrahedra.  Each can be refined by level
(h = 2^-level), and every mesh can be validated for orientation, face
sharing and a consistent simplex decomposition.
"""

import numpy as np

from wgelastic import GENERATORS, validate_mesh

# Element counts, mesh sizes and how many elements are nonconvex
for family in ("tri", "ncpoly2d", "tet3d"):
    for level in (1, 2, 3):
        mesh = GENERATORS[family](level)
        n_nonconvex = sum(not T.convex for T in mesh.elements)
        print(f"{family:9s} level {level}: {mesh.n_elements:5d} elements, "
              f"{mesh.n_faces:5d} faces, h = {mesh.h:.4f}, nonconvex: {n_nonconvex}")

# A single pentagon of the nonconvex family: its vertices and the reflex corner
mesh = GENERATORS["ncpoly2d"](1)
T = mesh.elements[0]
print("pentagon vertices:\n", np.round(mesh.vertices[list(T.vertex_ids)], 3))
print("measure", T.measure, "diameter", round(T.diameter, 4))

# The validation report lists every check with its offenders
report = validate_mesh(GENERATORS["ncpoly2d"](3))
for check in report.checks:
    print(f"{check.name:32s} {'ok' if check.passed else 'FAILED'}")
