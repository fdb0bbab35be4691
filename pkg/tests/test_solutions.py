import numpy as np
import pytest

from wgelastic.solutions import (
    e1_solution,
    e3_solution,
    finite_difference_force,
    get_solution,
    lame_from_young,
    polynomial_solution,
)


@pytest.mark.parametrize("make,dim", [(e1_solution, 2), (e3_solution, 3)])
@pytest.mark.parametrize("mu,lam", [(1.0, 1.0), (0.5, 1e5), (2.0, 0.0)])
def test_force_matches_finite_differences(make, dim, mu, lam, rng):
    sol = make(mu, lam)
    x = rng.uniform(0.05, 0.95, (100, dim))
    f = sol.f(x)
    fd = finite_difference_force(sol, x, step=1e-5)
    scale = np.abs(f).max()
    assert np.abs(f - fd).max() <= 1e-5 * scale


def test_polynomial_force_consistent(rng):
    sol = polynomial_solution(2, 3, mu=1.5, lam=4.0, seed=3)
    x = rng.uniform(0, 1, (50, 2))
    assert sol.degree == 3
    assert sol.f(x) == pytest.approx(finite_difference_force(sol, x), rel=1e-5, abs=1e-6)


def test_e1_divergence_free_and_zero_on_boundary(rng):
    sol = e1_solution()
    x = rng.uniform(0, 1, (200, 2))
    assert np.abs(np.trace(sol.grad_u(x), axis1=1, axis2=2)).max() < 1e-14
    t = rng.uniform(0, 1, 50)
    for side in (np.c_[t, 0 * t], np.c_[t, 0 * t + 1], np.c_[0 * t, t], np.c_[0 * t + 1, t]):
        assert np.abs(sol.u(side)).max() < 1e-15


def test_e1_force_independent_of_lambda(rng):
    x = rng.uniform(0, 1, (20, 2))
    assert e1_solution(1.0, 1.0).f(x) == pytest.approx(e1_solution(1.0, 1e7).f(x), rel=1e-12)


def test_e3_values():
    sol = e3_solution()
    x = np.array([[0.1, 0.2, 0.3]])
    assert sol.u(x)[0] == pytest.approx([np.exp(0.5), np.exp(0.4), np.exp(0.4)])


def test_lame():
    mu, lam = lame_from_young(1.0, 0.25)
    assert mu == pytest.approx(0.4)
    assert lam == pytest.approx(0.4)


def test_get_solution():
    assert get_solution("e1", 2, 1.0, 1.0).name == "e1"
    assert get_solution("polynomial-patch:2", 3, 1.0, 1.0).degree == 2
    with pytest.raises(ValueError, match="3D"):
        get_solution("e3", 2, 1.0, 1.0)
    with pytest.raises(ValueError):
        get_solution("e1", 3, 1.0, 1.0)
    with pytest.raises(ValueError):
        get_solution("nope", 2, 1.0, 1.0)
