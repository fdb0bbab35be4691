"""
Three dimensions
================

P1 on Kuhn tetrahedra for the smooth field e3 = (e^{y+z}, e^{z+x}, e^{z+x}).
Expected orders: 2 in L2 and 1 in the energy norm.
"""

from wgelastic import StudyConfig, convergence_study, emit_table

report = convergence_study(StudyConfig(family="tet3d", levels=(1, 2, 3), k=1, solution="e3"))
print(emit_table(report))
print("unknowns per level:", [r.ndof for r in report.rows])
