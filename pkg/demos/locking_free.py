"""
No locking as lambda grows
==========================

For a nearly incompressible material lambda is huge.  A locking method
would lose its convergence rate.  Here the e1 errors grow by at most a
factor of about two from lambda = 1 to lambda = 1e3 and then stop depending
on lambda at all; the orders are unaffected.  The linear systems get very
ill-conditioned (about 1e10), so they are solved with the sparse direct
solver, which is the default.
"""

from wgelastic import StudyConfig, convergence_study

levels = (3, 4, 5)
rows = {}
for lam in (1.0, 1e3, 1e5, 1e7):
    rows[lam] = convergence_study(StudyConfig(family="tri", levels=levels, k=1, lam=lam)).rows

print("lambda    " + "".join(f"  L2(level {L})" for L in levels) + "   last L2 order")
for lam, rs in rows.items():
    print(f"{lam:8.0e}  " + "".join(f"  {r.l2_err:11.3e}" for r in rs) + f"   {rs[-1].l2_order:.2f}")
