"""Error norms, discrete norms, property checks and convergence studies."""
from __future__ import annotations

import csv
import io
import logging
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .basis import build_element_basis, build_face_basis, make_basis, solve_mass
from .linsolve import solve
from .polymesh import GENERATORS, load_mesh
from .quadrature import element_quadrature, face_quadrature
from .solutions import ExactSolution, get_solution
from .system import AssembledSystem, assemble, build_dofmap, build_groups
from .weakops import (
    SYM_COMPONENTS,
    interpolate_local,
    project_divergence,
    project_strain,
    polynomial_local_dofs,
)

log = logging.getLogger(__name__)


# --------------------------------------------------------------------------
# errors of a computed solution


def _interior_values(group, x):
    """u_0 at every data point of every element in the group, (m, n_q, d)."""
    sp_ = group.space
    d = sp_.layout.d
    nk = sp_.layout.n_scalar_interior
    coeff = x[group.dofs[:, : d * nk]].reshape(-1, d, nk)
    psi = sp_.interior.eval(sp_.data_rule.points)
    return np.einsum("qa,mia->mqi", psi, coeff)


def l2_error(system: AssembledSystem, x: np.ndarray, exact: ExactSolution) -> float:
    """||u - u_0|| over the mesh; ``x`` is the full DOF vector."""
    total = 0.0
    d = system.dofmap.d
    for g in system.groups:
        pts = g.data_points()
        m, nq, _ = pts.shape
        uex = exact.u(pts.reshape(-1, d)).reshape(m, nq, d)
        diff = uex - _interior_values(g, x)
        total += np.einsum("q,mqi->", g.space.data_rule.weights, diff**2)
    return math.sqrt(total)


def _batched_exact_projections(group, exact):
    """Q_{r1} eps(u) and Q_{r2} div u for every element of the group."""
    sp_ = group.space
    d = sp_.layout.d
    rule = sp_.data_rule
    pts = group.data_points()
    m, nq, _ = pts.shape
    G = exact.grad_u(pts.reshape(-1, d)).reshape(m, nq, d, d)
    comps = SYM_COMPONENTS[d]
    eps = np.stack([0.5 * (G[..., i, j] + G[..., j, i]) for i, j in comps], axis=-1)
    div = np.trace(G, axis1=2, axis2=3)
    ps = sp_.strain.eval(rule.points) * rule.weights[:, None]
    pd = sp_.div.eval(rule.points) * rule.weights[:, None]
    rhs_s = np.einsum("qb,mqc->bmc", ps, eps).reshape(ps.shape[1], -1)
    cs = solve_mass(sp_.strain.mass, rhs_s).reshape(ps.shape[1], m, len(comps))
    rhs_d = pd.T @ div.T
    cd = solve_mass(sp_.div.mass, rhs_d)
    # rows stacked like E: component-major
    return np.transpose(cs, (1, 2, 0)).reshape(m, -1), cd.T


def energy_error(system: AssembledSystem, x: np.ndarray, exact: ExactSolution) -> float:
    """|||u - u_h||| with eps_w(u) = Q_{r1} eps(u) and div_w u = Q_{r2} div u."""
    total = 0.0
    for g in system.groups:
        ops = g.ops
        loc = x[g.dofs]
        es = loc @ ops.E.T
        ed = loc @ ops.D.T
        ps, pd = _batched_exact_projections(g, exact)
        ds, dd = ps - es, pd - ed
        total += 2 * system.mu * np.einsum("mi,ij,mj->", ds, ops.M_sym, ds)
        total += system.lam * np.einsum("mi,ij,mj->", dd, ops.M_div, dd)
    return math.sqrt(max(total, 0.0))


def interpolate(system: AssembledSystem, u) -> np.ndarray:
    """Full DOF vector of Q_h u = {Q_0 u, Q_b u}."""
    mesh, dm = system.mesh, system.dofmap
    d = dm.d
    x = np.zeros(dm.n_total)
    for g in system.groups:
        sp_ = g.space
        pts = g.data_points()
        m, nq, _ = pts.shape
        vals = u(pts.reshape(-1, d)).reshape(m, nq, d)
        psi = sp_.interior.eval(sp_.data_rule.points) * sp_.data_rule.weights[:, None]
        rhs = np.einsum("qa,mqi->ami", psi, vals).reshape(psi.shape[1], -1)
        c = solve_mass(sp_.interior.mass, rhs).reshape(psi.shape[1], m, d)
        x[g.dofs[:, : sp_.layout.n_interior]] = np.transpose(c, (1, 2, 0)).reshape(m, -1)
    for f in range(mesh.n_faces):
        basis = build_face_basis(mesh, f, dm.k, orthonormalize=True,
                                 rule=face_quadrature(mesh, f, 2 * dm.k + 2))
        rule = face_quadrature(mesh, f, max(14, 2 * dm.k + 6))
        x[dm.face_block(f)] = basis.project_values(rule, u(rule.points)).T.ravel()
    return x


# --------------------------------------------------------------------------
# discrete norms


def energy_norm(system: AssembledSystem, x: np.ndarray) -> float:
    """|||v||| = sqrt(v^T A v) with the full (unreduced) stiffness matrix."""
    return math.sqrt(max(float(x @ (system.A_full @ x)), 0.0))


def energy_norm_elementwise(system: AssembledSystem, x: np.ndarray) -> float:
    """Same quantity as ``energy_norm`` computed element by element from the
    weak strain and divergence coefficients."""
    total = 0.0
    for g in system.groups:
        loc = x[g.dofs]
        es = loc @ g.ops.E.T
        ed = loc @ g.ops.D.T
        total += 2 * system.mu * np.einsum("mi,ij,mj->", es, g.ops.M_sym, es)
        total += system.lam * np.einsum("mi,ij,mj->", ed, g.ops.M_div, ed)
    return math.sqrt(max(total, 0.0))


def discrete_h1_seminorm(system: AssembledSystem, x: np.ndarray) -> float:
    """||v||_{1,h}: strong strain and divergence of v_0 plus the
    h_T^{-1}-weighted boundary mismatch ||v_0 - v_b||_{dT}^2."""
    mu, lam = system.mu, system.lam
    total = 0.0
    for g in system.groups:
        sp_ = g.space
        lay = sp_.layout
        d, nk = lay.d, lay.n_scalar_interior
        loc = x[g.dofs]
        c0 = loc[:, : lay.n_interior].reshape(-1, d, nk)
        rule = sp_.rule
        dpsi = sp_.interior.grad(rule.points)  # (q, a, l)
        G = np.einsum("qal,mia->mqil", dpsi, c0)
        eps = 0.5 * (G + np.swapaxes(G, 2, 3))
        div = np.trace(G, axis1=2, axis2=3)
        total += 2 * mu * np.einsum("q,mqij->", rule.weights, eps**2)
        total += lam * np.einsum("q,mq->", rule.weights, div**2)
        for j, (fb, fr) in enumerate(zip(sp_.faces, sp_.face_rules)):
            v0 = np.einsum("qa,mia->mqi", sp_.interior.eval(fr.points), c0)
            cb = loc[:, lay.face_block(j)].reshape(-1, d, lay.n_scalar_face)
            vb = np.einsum("qa,mia->mqi", fb.eval(fr.points), cb)
            total += np.einsum("q,mqi->", fr.weights, (v0 - vb) ** 2) / sp_.h
    return math.sqrt(max(total, 0.0))


def discrete_h1_seminorm_bruteforce(mesh, k, mu, lam, x) -> float:
    """Independent recomputation of ||v||_{1,h} element by element with fresh
    bases and rules (no operator sharing, no batching)."""
    dm = build_dofmap(mesh, k)
    d = mesh.dim
    total = 0.0
    for e, T in enumerate(mesh.elements):
        dofs = x[dm.element_dofs(mesh, e)]
        rule0 = element_quadrature(mesh, e, 2 * k + 4)
        b0 = build_element_basis(mesh, e, k, True, rule=rule0)
        nk = b0.dim_space
        c0 = dofs[: d * nk].reshape(d, nk)
        rule = element_quadrature(mesh, e, 2 * k + 1)
        G = np.einsum("qal,ia->qil", b0.grad(rule.points), c0)
        for q, w in enumerate(rule.weights):
            eps = 0.5 * (G[q] + G[q].T)
            total += w * (2 * mu * np.sum(eps**2) + lam * np.trace(G[q]) ** 2)
        off = d * nk
        for f in T.face_ids:
            fb = build_face_basis(mesh, f, k, True, rule=face_quadrature(mesh, f, 2 * k + 4))
            nf = fb.dim_space
            cb = dofs[off: off + d * nf].reshape(d, nf)
            off += d * nf
            fr = face_quadrature(mesh, f, 2 * k + 1)
            diff = b0.eval(fr.points) @ c0.T - fb.eval(fr.points) @ cb.T
            total += fr.weights @ np.sum(diff**2, axis=1) / T.diameter
    return math.sqrt(total)


# --------------------------------------------------------------------------
# property checks


@dataclass
class RatioStats:
    min: float
    max: float
    n_samples: int
    n_skipped: int

    @property
    def band(self) -> float:
        return self.max / self.min


def check_norm_equivalence(system: AssembledSystem, n_samples: int = 50, seed: int = 0) -> RatioStats:
    """min/max of |||v||| / ||v||_{1,h} over random v in V_h (coefficients
    uniform on [-1, 1] in the orthonormal bases)."""
    rng = np.random.default_rng(seed)
    ratios = []
    skipped = 0
    for _ in range(n_samples):
        v = rng.uniform(-1.0, 1.0, system.dofmap.n_total)
        den = discrete_h1_seminorm(system, v)
        num = energy_norm(system, v)
        if den == 0.0:
            if num > 1e-12:
                raise AssertionError("|||v||| nonzero where ||v||_{1,h} vanishes")
            skipped += 1
            continue
        ratios.append(num / den)
    ratios = np.array(ratios)
    return RatioStats(float(ratios.min()), float(ratios.max()), len(ratios), skipped)


@dataclass
class CommutationResult:
    strain_deviation: float
    div_deviation: float

    @property
    def max_deviation(self) -> float:
        return max(self.strain_deviation, self.div_deviation)


def check_commutation(mesh, k: int, n_samples: int = 20, seed: int = 0,
                      extra_degree: int = 0, policy="paper", r1=None, r2=None) -> CommutationResult:
    """Max coefficient deviation of eps_w(w) from Q_{r1} eps(w) and of
    div_w(w) from Q_{r2} div(w) over random polynomial fields.

    With ``extra_degree = 0`` the fields lie in [P_k]^d and the identities
    hold exactly.  With ``extra_degree > 0`` the field has degree k + extra,
    the weak function is {Q_0 w, Q_b w} and the deviation is generally
    nonzero; it is reported, not judged.
    """
    rng = np.random.default_rng(seed)
    dm = build_dofmap(mesh, k)
    groups = build_groups(mesh, dm, k, policy, r1, r2)
    dev_s = dev_d = 0.0
    for g in groups:
        sp_ = g.space
        ops = g.ops
        d = sp_.layout.d
        if extra_degree == 0:
            basis = sp_.interior
        else:
            basis = make_basis(sp_.interior.center, np.eye(d), sp_.h,
                               k + extra_degree, sp_.data_rule, True)
        for _ in range(n_samples):
            c = rng.uniform(-1.0, 1.0, (basis.dim_space, d))

            def grad(x, c=c):
                return np.einsum("qal,ai->qil", basis.grad(x), c)

            if extra_degree == 0:
                dofs = polynomial_local_dofs(sp_, c)
            else:
                dofs = interpolate_local(mesh, g.elements[0], sp_, lambda x, c=c: basis.eval(x) @ c)
            dev_s = max(dev_s, float(np.abs(ops.E @ dofs - project_strain(sp_, grad)).max()))
            dev_d = max(dev_d, float(np.abs(ops.D @ dofs - project_divergence(sp_, grad)).max()))
    return CommutationResult(dev_s, dev_d)


# --------------------------------------------------------------------------
# convergence studies


@dataclass
class StudyConfig:
    family: str = "tri"  # tri | ncpoly2d | tet3d | file:<path>
    levels: tuple = (2, 3, 4)
    k: int = 1
    mu: float = 1.0
    lam: float = 1.0
    solution: str = "e1"
    degree_policy: str = "paper"
    r1: int | None = None
    r2: int | None = None
    quad_oversample: int | None = None
    solver: str = "direct"
    solver_tol: float = 1e-12
    maxit: int | None = None
    precond: str = "jacobi"
    seed: int = 0

    @property
    def dim(self) -> int:
        if self.family == "tet3d":
            return 3
        if self.family in ("tri", "ncpoly2d"):
            return 2
        if self.family.startswith("file:"):
            return load_mesh(self.family[5:]).dim
        raise ValueError(f"unknown mesh family {self.family!r}")

    def validate(self) -> None:
        if not self.levels:
            raise ValueError("levels must be nonempty")
        if not 1 <= self.k <= 4:
            raise ValueError("k must lie in [1, 4]")
        if self.mu <= 0 or self.lam < 0:
            raise ValueError("need mu > 0 and lambda >= 0")
        if self.degree_policy not in ("paper", "override"):
            raise ValueError(f"unknown degree policy {self.degree_policy!r}")
        if self.degree_policy == "override" and (self.r1 is None or self.r2 is None):
            raise ValueError("override degree policy needs r1 and r2")
        get_solution(self.solution, self.dim, self.mu, self.lam, self.seed)

    def mesh(self, level):
        if self.family.startswith("file:"):
            return load_mesh(self.family[5:])
        return GENERATORS[self.family](level)


@dataclass
class LevelResult:
    level: int
    h: float
    ndof: int
    l2_err: float
    energy_err: float
    solver_iters: int
    converged: bool
    residual: float
    l2_order: float | None = None
    energy_order: float | None = None
    seconds: float = 0.0


@dataclass
class ConvergenceReport:
    rows: list
    metadata: dict = field(default_factory=dict)

    def compute_orders(self) -> None:
        for prev, row in zip(self.rows, self.rows[1:]):
            ratio = prev.h / row.h
            row.l2_order = _order(prev.l2_err, row.l2_err, ratio)
            row.energy_order = _order(prev.energy_err, row.energy_err, ratio)

    @property
    def all_converged(self) -> bool:
        return all(r.converged for r in self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["level", "h", "ndof", "l2_err", "l2_order", "energy_err",
                    "energy_order", "solver_iters", "converged"])
        for r in self.rows:
            w.writerow([r.level, repr(r.h), r.ndof, repr(r.l2_err), _fmt_csv(r.l2_order),
                        repr(r.energy_err), _fmt_csv(r.energy_order), r.solver_iters,
                        int(r.converged)])
        return buf.getvalue()


def _fmt_csv(v):
    return "" if v is None else repr(v)


def _order(e_coarse, e_fine, ratio):
    if e_coarse <= 0 or e_fine <= 0:
        return None
    return math.log(e_coarse / e_fine) / math.log(ratio)


def run_level(config: StudyConfig, level: int, exact: ExactSolution | None = None) -> LevelResult:
    t0 = time.perf_counter()
    mesh = config.mesh(level)
    if exact is None:
        exact = get_solution(config.solution, mesh.dim, config.mu, config.lam, config.seed)
    system = assemble(mesh, config.k, config.mu, config.lam, exact.f, exact.u,
                      policy=config.degree_policy, r1=config.r1, r2=config.r2,
                      oversample=config.quad_oversample)
    xf, stats = solve(system.A, system.rhs, config.solver, config.solver_tol,
                      config.maxit, config.precond)
    x = system.expand(xf)
    res = LevelResult(
        level=level,
        h=mesh.h,
        ndof=system.n_free,
        l2_err=l2_error(system, x, exact),
        energy_err=energy_error(system, x, exact),
        solver_iters=stats.iterations,
        converged=stats.converged,
        residual=stats.residual,
        seconds=time.perf_counter() - t0,
    )
    log.info("level %d: ndof=%d l2=%.3e energy=%.3e (%.1fs)", level, res.ndof,
             res.l2_err, res.energy_err, res.seconds)
    return res


def convergence_study(config: StudyConfig) -> ConvergenceReport:
    """generate -> assemble -> solve -> measure, for every level."""
    config.validate()
    exact = get_solution(config.solution, config.dim, config.mu, config.lam, config.seed)
    rows = [run_level(config, L, exact) for L in config.levels]
    report = ConvergenceReport(rows, metadata=asdict(config))
    report.compute_orders()
    return report


def emit_table(report: ConvergenceReport, fmt: str = "md") -> str:
    """Grid | L2 error | order | energy error | order, errors to 3 significant
    digits, orders to one decimal.  Rows from a non-converged solve get an
    asterisk on their orders."""
    if not report.rows:
        raise ValueError("empty report")
    if fmt == "csv":
        return report.to_csv()
    lines = ["| Grid | L2 error | order | energy error | order |",
             "|---|---|---|---|---|"]
    for r in report.rows:
        flag = "" if r.converged else "*"

        def o(v):
            return flag if v is None else f"{v:.1f}{flag}"

        lines.append(
            f"| {r.level} | {r.l2_err:.3e} | {o(r.l2_order)} | {r.energy_err:.3e} | {o(r.energy_order)} |"
        )
    if not report.all_converged:
        lines.append("")
        lines.append("\\* solver did not converge on this level")
    return "\n".join(lines)
