"""Manufactured displacement fields for isotropic linear elasticity.

The body force f = -div sigma(u), sigma(u) = 2 mu eps(u) + lam (div u) I, is
derived symbolically and compiled to numpy functions.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import sympy


def lame_from_young(E: float, nu: float) -> tuple[float, float]:
    """(mu, lam) for plane strain / 3D from Young's modulus and Poisson ratio."""
    lam = E * nu / ((1 + nu) * (1 - 2 * nu))
    mu = E / (2 * (1 + nu))
    return mu, lam


def _vectorize(fn, shape):
    def wrapped(x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.empty((x.shape[0],) + shape)
        vals = fn(*x.T)
        for idx in np.ndindex(*shape):
            out[(slice(None),) + idx] = np.broadcast_to(vals[idx[0]] if len(shape) == 1
                                                         else vals[idx[0]][idx[1]], x.shape[0])
        return out

    return wrapped


@dataclass
class ExactSolution:
    name: str
    dim: int
    mu: float
    lam: float
    u: Callable
    grad_u: Callable  # points -> (n, d, d) with grad[i, j] = d u_i / d x_j
    f: Callable
    degree: int | None = None  # polynomial degree if u is a polynomial
    exprs: tuple = ()

    @property
    def g(self):
        return self.u

    def stress(self, x):
        G = self.grad_u(x)
        eps = 0.5 * (G + np.swapaxes(G, 1, 2))
        tr = np.trace(G, axis1=1, axis2=2)
        return 2 * self.mu * eps + self.lam * tr[:, None, None] * np.eye(self.dim)

    @classmethod
    def from_expressions(cls, name, exprs, mu, lam):
        d = len(exprs)
        X = sympy.symbols("x y z")[:d]
        u = sympy.Matrix([sympy.sympify(e) for e in exprs])
        G = u.jacobian(X)
        div = sum(G[i, i] for i in range(d))
        sigma = mu * (G + G.T) + lam * div * sympy.eye(d)
        f = sympy.Matrix([-sum(sympy.diff(sigma[i, j], X[j]) for j in range(d)) for i in range(d)])
        f = sympy.simplify(f)
        try:
            degree = max(sympy.Poly(e, *X).total_degree() for e in u)
        except sympy.PolynomialError:
            degree = None
        lam_u = sympy.lambdify(X, list(u), "numpy")
        lam_G = sympy.lambdify(X, G.tolist(), "numpy")
        lam_f = sympy.lambdify(X, list(f), "numpy")
        return cls(
            name=name,
            dim=d,
            mu=float(mu),
            lam=float(lam),
            u=_vectorize(lam_u, (d,)),
            grad_u=_vectorize(lam_G, (d, d)),
            f=_vectorize(lam_f, (d,)),
            degree=degree,
            exprs=tuple(str(e) for e in u),
        )


def e1_solution(mu: float = 1.0, lam: float = 1.0) -> ExactSolution:
    """Divergence-free field on the unit square, vanishing on its boundary."""
    x, y = sympy.symbols("x y")
    u1 = (x**2 - 2 * x**3 + x**4) * (2 * y - 6 * y**2 + 4 * y**3)
    u2 = -(y**2 - 2 * y**3 + y**4) * (2 * x - 6 * x**2 + 4 * x**3)
    return ExactSolution.from_expressions("e1", [u1, u2], mu, lam)


def e3_solution(mu: float = 1.0, lam: float = 1.0) -> ExactSolution:
    x, y, z = sympy.symbols("x y z")
    return ExactSolution.from_expressions(
        "e3", [sympy.exp(y + z), sympy.exp(z + x), sympy.exp(z + x)], mu, lam
    )


def polynomial_solution(dim: int, degree: int, mu: float = 1.0, lam: float = 1.0,
                        seed: int = 0) -> ExactSolution:
    """Random polynomial field of exact total degree ``degree`` per component
    (integer coefficients in [-3, 3])."""
    rng = np.random.default_rng(seed)
    X = sympy.symbols("x y z")[:dim]
    from .basis import monomial_exponents

    exps = monomial_exponents(dim, degree)
    comps = []
    for _ in range(dim):
        c = rng.integers(-3, 4, size=len(exps))
        c[-1] = c[-1] or 1  # keep the top degree present
        comps.append(sum(int(ci) * sympy.prod([Xi**int(a) for Xi, a in zip(X, e)])
                         for ci, e in zip(c, exps)))
    return ExactSolution.from_expressions(f"poly{degree}", comps, mu, lam)


SOLUTIONS = {"e1": (2, e1_solution), "e3": (3, e3_solution)}


def get_solution(name: str, dim: int, mu: float, lam: float, seed: int = 0) -> ExactSolution:
    """Resolve ``e1``, ``e3`` or ``polynomial-patch:<degree>``."""
    if name.startswith("polynomial-patch:"):
        return polynomial_solution(dim, int(name.split(":", 1)[1]), mu, lam, seed)
    if name not in SOLUTIONS:
        raise ValueError(f"unknown solution {name!r}")
    sdim, make = SOLUTIONS[name]
    if sdim != dim:
        raise ValueError(f"solution {name} is {sdim}D but the mesh is {dim}D")
    return make(mu, lam)


def finite_difference_force(sol: ExactSolution, x: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """-div sigma(u) by centred differences of the analytic stress."""
    x = np.atleast_2d(x)
    d = sol.dim
    out = np.zeros((x.shape[0], d))
    for j in range(d):
        e = np.zeros(d)
        e[j] = step
        dsig = (sol.stress(x + e) - sol.stress(x - e)) / (2 * step)
        out -= dsig[:, :, j]
    return out
