"""
Nonconvex elements
==================

The scheme needs no stabiliser and no convexity: here P1 and P2 on a grid
of nonconvex pentagons.  On nonconvex elements the default weak-strain
degree is 2N + k - 1 (11 for P2 pentagons), which costs time and gives
larger error constants on coarse grids; the last table uses the smallest
stable degrees for comparison.
"""

import time

from wgelastic import StudyConfig, convergence_study, emit_table

for k, levels in ((1, (3, 4, 5)), (2, (2, 3, 4))):
    t0 = time.perf_counter()
    report = convergence_study(StudyConfig(family="ncpoly2d", levels=levels, k=k))
    print(f"P{k}, default degrees ({time.perf_counter() - t0:.1f}s)")
    print(emit_table(report))
    print()

report = convergence_study(StudyConfig(family="ncpoly2d", levels=(2, 3, 4), k=2,
                                       degree_policy="override", r1=4, r2=3))
print("P2, (r1, r2) = (4, 3)")
print(emit_table(report))
