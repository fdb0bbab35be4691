import csv
import io

import numpy as np
import pytest

from wgelastic.analysis import (
    ConvergenceReport,
    LevelResult,
    StudyConfig,
    check_commutation,
    check_norm_equivalence,
    convergence_study,
    discrete_h1_seminorm,
    discrete_h1_seminorm_bruteforce,
    emit_table,
    energy_error,
    energy_norm,
    energy_norm_elementwise,
    interpolate,
    l2_error,
)
from wgelastic.basis import build_face_basis, l2_project_face
from wgelastic.linsolve import solve
from wgelastic.solutions import e1_solution, polynomial_solution
from wgelastic.system import assemble

from helpers import SMALL, cached_mesh


@pytest.mark.parametrize("family,level", SMALL)
def test_interpolant_of_polynomial_has_zero_error(family, level):
    m = cached_mesh(family, level)
    exact = polynomial_solution(m.dim, 2, seed=1)
    s = assemble(m, 2, 1.0, 1.0)
    q = interpolate(s, exact.u)
    assert l2_error(s, q, exact) <= 1e-10
    assert energy_error(s, q, exact) <= 1e-9


def test_l2_error_of_zero_solution():
    # u_0 = 0 against u = (1, 0): the error is the domain measure to the 1/2
    m = cached_mesh("ncpoly2d", 2)
    s = assemble(m, 1, 1.0, 1.0)
    exact = polynomial_solution(2, 0, seed=0)
    val = np.abs(exact.u(np.zeros((1, 2)))).ravel()
    assert l2_error(s, np.zeros(s.dofmap.n_total), exact) == pytest.approx(np.linalg.norm(val), rel=1e-13)


class TestEnergyNorm:
    def test_zero(self):
        s = assemble(cached_mesh("tri", 2), 1, 1.0, 1.0)
        assert energy_norm(s, np.zeros(s.dofmap.n_total)) == 0.0

    @pytest.mark.parametrize("family,level", SMALL)
    def test_elementwise_agrees(self, family, level, rng):
        s = assemble(cached_mesh(family, level), 2, 1.0, 3.0)
        v = rng.uniform(-1, 1, s.dofmap.n_total)
        assert energy_norm(s, v) == pytest.approx(energy_norm_elementwise(s, v), rel=1e-11)

    @pytest.mark.parametrize("family,level", SMALL)
    def test_stretch_field(self, family, level):
        m = cached_mesh(family, level)
        s = assemble(m, 1, 1.0, 0.0)

        def u(x):
            out = np.zeros_like(x)
            out[:, 0] = x[:, 0]
            return out

        assert energy_norm(s, interpolate(s, u)) == pytest.approx(np.sqrt(2.0), rel=1e-10)


class TestDiscreteH1:
    def test_translation_is_zero(self):
        s = assemble(cached_mesh("ncpoly2d", 2), 2, 1.0, 1.0)
        v = interpolate(s, lambda x: np.tile([0.3, -2.0], (len(x), 1)))
        assert discrete_h1_seminorm(s, v) <= 1e-12

    def test_single_face_jump(self):
        """v_0 = 0 and v_b = (1, 0) on one interior edge: each incident element
        contributes h_T^{-1} |e| to the square."""
        m = cached_mesh("tri", 1)
        s = assemble(m, 1, 0.5, 0.0)
        f = next(i for i, fc in enumerate(m.faces) if not fc.boundary)
        v = np.zeros(s.dofmap.n_total)
        b = build_face_basis(m, f, 1, orthonormalize=True)
        c = l2_project_face(lambda x: np.tile([1.0, 0.0], (len(x), 1)), m, f, basis=b)
        v[s.dofmap.face_block(f)] = c.T.ravel()
        expect = sum(m.faces[f].measure / m.elements[e].diameter for e in m.face_elements[f] if e >= 0)
        assert discrete_h1_seminorm(s, v) ** 2 == pytest.approx(expect, rel=1e-12)

    @pytest.mark.parametrize("family,level", SMALL)
    def test_bruteforce_oracle(self, family, level, rng):
        m = cached_mesh(family, level)
        s = assemble(m, 2, 0.8, 1.7)
        v = rng.uniform(-1, 1, s.dofmap.n_total)
        brute = discrete_h1_seminorm_bruteforce(m, 2, 0.8, 1.7, v)
        assert discrete_h1_seminorm(s, v) == pytest.approx(brute, rel=1e-11)


class TestNormEquivalence:
    def test_kernel_coincidence(self):
        s = assemble(cached_mesh("tri", 2), 1, 1.0, 1.0)
        v = interpolate(s, lambda x: np.stack([-x[:, 1], x[:, 0]], axis=1))
        assert discrete_h1_seminorm(s, v) <= 1e-12
        # the quadratic form is at roundoff level; its square root is ~1e-7
        assert energy_norm(s, v) ** 2 <= 1e-12
        assert energy_norm_elementwise(s, v) <= 1e-12

    def test_pentagons_finite_positive(self):
        s = assemble(cached_mesh("ncpoly2d", 2), 2, 1.0, 1.0)
        r = check_norm_equivalence(s, 50, seed=0)
        assert r.n_samples == 50 and r.n_skipped == 0
        assert 0 < r.min <= r.max < np.inf

    def test_band_stable_on_triangles(self):
        bands = [check_norm_equivalence(assemble(cached_mesh("tri", L), 1, 1.0, 1.0), 50, 0)
                 for L in (2, 3, 4)]
        assert bands[-1].max <= 1.5 * bands[0].max
        assert bands[-1].min >= bands[0].min / 1.5


class TestCommutation:
    @pytest.mark.parametrize("family,level,k", [
        (fam, lvl, k) for fam, lvl in SMALL for k in ((1, 2) if fam == "tet3d" else (1, 2, 3, 4))
    ])
    def test_exact_for_degree_k(self, family, level, k):
        res = check_commutation(cached_mesh(family, level), k, n_samples=20, seed=k)
        assert res.max_deviation <= 1e-10

    def test_degree_k_plus_one_reported(self):
        res = check_commutation(cached_mesh("ncpoly2d", 2), 1, n_samples=5, extra_degree=1)
        assert res.max_deviation > 1e-6

    def test_override_degrees(self):
        res = check_commutation(cached_mesh("tri", 2), 2, n_samples=5, policy="override", r1=3, r2=1)
        assert res.max_deviation <= 1e-10


def _report(errs, converged=None):
    rows = [LevelResult(level=i + 1, h=2.0**-i, ndof=10 * 4**i, l2_err=e0, energy_err=e1,
                        solver_iters=0, converged=True if converged is None else converged[i],
                        residual=0.0)
            for i, (e0, e1) in enumerate(errs)]
    rep = ConvergenceReport(rows)
    rep.compute_orders()
    return rep


class TestTables:
    def test_single_level(self):
        text = emit_table(_report([(1e-2, 1e-1)]))
        lines = text.splitlines()
        assert lines[0] == "| Grid | L2 error | order | energy error | order |"
        assert lines[2] == "| 1 | 1.000e-02 |  | 1.000e-01 |  |"

    def test_two_levels(self):
        rep = _report([(4e-2, 4e-1), (1e-2, 2e-1)])
        assert rep.rows[1].l2_order == pytest.approx(2.0)
        assert "| 2 | 1.000e-02 | 2.0 | 2.000e-01 | 1.0 |" in emit_table(rep)

    def test_flagged_row(self):
        text = emit_table(_report([(4e-2, 4e-1), (1e-2, 2e-1)], converged=[True, False]))
        assert "| 2 | 1.000e-02 | 2.0* | 2.000e-01 | 1.0* |" in text
        assert "did not converge" in text

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            emit_table(ConvergenceReport([]))

    def test_csv_and_markdown_agree(self):
        rep = _report([(4.123456e-2, 4e-1), (1.01e-2, 2.2e-1), (2.6e-3, 1.05e-1)])
        rows = list(csv.DictReader(io.StringIO(emit_table(rep, "csv"))))
        assert list(rows[0]) == ["level", "h", "ndof", "l2_err", "l2_order", "energy_err",
                                 "energy_order", "solver_iters", "converged"]
        md = emit_table(rep).splitlines()[2:]
        for row, line in zip(rows, md):
            cells = [c.strip() for c in line.strip("|").split("|")]
            assert f"{float(row['l2_err']):.3e}" == cells[1]
            assert f"{float(row['energy_err']):.3e}" == cells[3]
            if row["l2_order"]:
                assert f"{float(row['l2_order']):.1f}" == cells[2]


class TestStudy:
    def test_config_validation(self):
        with pytest.raises(ValueError):
            StudyConfig(family="tet3d", solution="e1").validate()
        with pytest.raises(ValueError):
            StudyConfig(levels=()).validate()
        with pytest.raises(ValueError):
            StudyConfig(k=5).validate()
        with pytest.raises(ValueError):
            StudyConfig(degree_policy="override").validate()

    def test_small_study(self):
        rep = convergence_study(StudyConfig(family="tri", levels=(3, 4, 5), k=1))
        assert rep.all_converged
        assert [r.level for r in rep.rows] == [3, 4, 5]
        assert rep.rows[0].l2_order is None
        assert rep.rows[-1].l2_order == pytest.approx(2.0, abs=0.3)
        assert rep.rows[-1].energy_order == pytest.approx(1.0, abs=0.2)
        assert rep.metadata["k"] == 1

    def test_study_matches_manual_pipeline(self):
        ex = e1_solution()
        m = cached_mesh("ncpoly2d", 3)
        s = assemble(m, 1, 1.0, 1.0, ex.f, ex.u)
        x = s.expand(solve(s.A, s.rhs)[0])
        rep = convergence_study(StudyConfig(family="ncpoly2d", levels=(3,), k=1))
        assert rep.rows[0].l2_err == pytest.approx(l2_error(s, x, ex), rel=1e-10)
        assert rep.rows[0].ndof == s.n_free


@pytest.mark.parametrize("family,level,k", [("tri", 4, 1), ("ncpoly2d", 3, 2), ("tet3d", 2, 1)])
def test_quadrature_oversampling_sensitivity(family, level, k):
    """Raising the data quadrature degree from the default to 24 changes the
    errors of the smooth solutions by far less than the discretisation error
    changes between levels."""
    sol = "e3" if family == "tet3d" else "e1"
    base = convergence_study(StudyConfig(family=family, levels=(level,), k=k, solution=sol)).rows[0]
    fine = convergence_study(StudyConfig(family=family, levels=(level,), k=k, solution=sol,
                                         quad_oversample=24)).rows[0]
    assert fine.l2_err == pytest.approx(base.l2_err, rel=1e-3)
    assert fine.energy_err == pytest.approx(base.energy_err, rel=1e-3)
