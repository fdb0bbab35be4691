"""
Lowest-order convergence on triangles
=====================================

P1 weak Galerkin for the divergence-free field e1 on the unit square with
mu = lambda = 1.  The L2 error should fall like h^2 and the energy error
like h.
"""

from wgelastic import StudyConfig, convergence_study, emit_table

cfg = StudyConfig(family="tri", levels=(3, 4, 5, 6), k=1, mu=1.0, lam=1.0, solution="e1")
report = convergence_study(cfg)
print(emit_table(report))

# Same run with the smallest stable weak-strain degree instead of the default
cfg_min = StudyConfig(family="tri", levels=(3, 4, 5, 6), k=1, solution="e1",
                      degree_policy="override", r1=2, r2=1)
print()
print(emit_table(convergence_study(cfg_min)))
