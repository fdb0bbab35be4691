"""
Inside one element: weak strain, commutation and energy
=======================================================

A weak function carries a polynomial inside the element and another on
each edge.  Its weak strain is a polynomial matrix computed from both.  For
a smooth field w, the weak strain of {Q_0 w, Q_b w} equals the L2
projection of the true strain; rigid motions have zero energy.
"""

import numpy as np

from wgelastic import GENERATORS, local_ops, local_stiffness
from wgelastic.analysis import check_commutation
from wgelastic.weakops import interpolate_local

mesh = GENERATORS["ncpoly2d"](1)
ops = local_ops(mesh, 0, k=1)
print("degrees (r1, r2):", ops.r1, ops.r2)
print("local unknowns:", ops.layout.total, " weak strain coefficients:", ops.E.shape[0])

K = local_stiffness(ops, mu=1.0, lam=1.0)
ev = np.linalg.eigvalsh(K)
print("zero eigenvalues of K_T (rigid motions):", int(np.sum(ev < 1e-9 * ev.max())))

# energy of a rotation and of a stretch
rotation = interpolate_local(mesh, 0, ops.space, lambda x: np.stack([-x[:, 1], x[:, 0]], axis=1))
stretch = interpolate_local(mesh, 0, ops.space, lambda x: np.stack([x[:, 0], 0 * x[:, 1]], axis=1))
print("rotation energy", rotation @ K @ rotation)
print("stretch energy ", stretch @ local_stiffness(ops, 1.0, 0.0) @ stretch,
      "(2 mu |T| =", 2 * mesh.elements[0].measure, ")")

# commutation holds to roundoff for degree-k fields and fails for degree k+1
for extra in (0, 1):
    dev = check_commutation(mesh, 1, n_samples=10, extra_degree=extra).max_deviation
    print(f"field degree k+{extra}: max deviation {dev:.2e}")
