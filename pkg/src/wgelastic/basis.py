"""Polynomial bases on elements and faces, mass matrices and L2 projections.

Element bases are scaled, centred monomials ((x - x_c)/h_T)^alpha in graded
lexicographic order, optionally orthonormalised in L2(T) by modified
Gram-Schmidt.  The orthonormal basis is stored as the recurrence that built it
rather than as monomial coefficients (those reach 1e12 at degree 13).  Face
bases live in the face's own tangent coordinates, so P_k(e) is intrinsically
(d-1)-dimensional.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np
import scipy.linalg as sla

from .quadrature import QuadratureRule, element_quadrature, face_quadrature

ORTHONORMALIZE_FROM = 6
BREAKDOWN_TOL = 1e-10


class ConditioningError(np.linalg.LinAlgError):
    pass


def dim_poly(r: int, d: int) -> int:
    return comb(r + d, d)


@lru_cache(maxsize=None)
def monomial_exponents(d: int, r: int) -> np.ndarray:
    """Exponents of all monomials of total degree <= r, graded lex order."""
    out = []
    for deg in range(r + 1):
        if d == 1:
            out.append((deg,))
        elif d == 2:
            out.extend((deg - j, j) for j in range(deg + 1))
        else:
            for a in range(deg, -1, -1):
                out.extend((a, deg - a - j, j) for j in range(deg - a + 1))
    arr = np.array(out, dtype=int)
    arr.flags.writeable = False
    return arr


def _powers(xi, r):
    # xi: (n, d) -> (n, d, r+1) table of xi^p
    P = np.ones(xi.shape + (r + 1,))
    for p in range(1, r + 1):
        P[..., p] = P[..., p - 1] * xi
    return P


@dataclass(frozen=True)
class Recurrence:
    """Orthonormalisation recorded as an Arnoldi-type recurrence.

    Function j (j >= 1) is ``(xi[axis[j]] * q[parent[j]] - sum_i H[i, j] q[i]) / norm[j]``
    with q[0] = 1 / norm[0].  Replaying the recurrence keeps evaluation stable
    at high degree where an explicit monomial change of basis is not.
    """

    parent: np.ndarray
    axis: np.ndarray
    H: np.ndarray
    norm: np.ndarray


@dataclass(frozen=True)
class PolynomialBasis:
    """Basis of P_r in local coordinates xi = (x - center) @ axes.T / scale.

    Without a recurrence the basis is the raw scaled monomials; with one it
    is the L2-orthonormalised basis spanning the same space.
    """

    degree: int
    center: np.ndarray
    axes: np.ndarray  # (d_local, d_ambient)
    scale: float
    recurrence: Recurrence | None
    mass: np.ndarray

    @property
    def dim_space(self) -> int:
        return len(self.exponents)

    @property
    def local_dim(self) -> int:
        return self.axes.shape[0]

    @property
    def exponents(self) -> np.ndarray:
        return monomial_exponents(self.local_dim, self.degree)

    @property
    def orthonormal(self) -> bool:
        return self.recurrence is not None

    def local_coords(self, x):
        return (np.atleast_2d(x) - self.center) @ self.axes.T / self.scale

    def _monomials(self, xi):
        P = _powers(xi, self.degree)
        ex = self.exponents
        vals = np.ones((xi.shape[0], len(ex)))
        for a in range(xi.shape[1]):
            vals *= P[:, a, ex[:, a]]
        return vals

    def _monomial_grads(self, xi):
        P = _powers(xi, self.degree)
        ex = self.exponents
        dl = xi.shape[1]
        g = np.ones((xi.shape[0], len(ex), dl))
        for b in range(dl):
            for a in range(dl):
                if a == b:
                    e = ex[:, a]
                    g[:, :, b] *= e * P[:, a, np.maximum(e - 1, 0)]
                else:
                    g[:, :, b] *= P[:, a, ex[:, a]]
        return g

    def _replay(self, xi, with_grad):
        rec = self.recurrence
        n = len(rec.norm)
        Q = np.empty((xi.shape[0], n))
        Q[:, 0] = 1.0 / rec.norm[0]
        G = np.zeros((xi.shape[0], n, xi.shape[1])) if with_grad else None
        for j in range(1, n):
            p, a = rec.parent[j], rec.axis[j]
            h = rec.H[:j, j]
            Q[:, j] = (xi[:, a] * Q[:, p] - Q[:, :j] @ h) / rec.norm[j]
            if with_grad:
                g = xi[:, a, None] * G[:, p, :] - np.einsum("pid,i->pd", G[:, :j, :], h)
                g[:, a] += Q[:, p]
                G[:, j, :] = g / rec.norm[j]
        return Q, G

    def eval(self, x) -> np.ndarray:
        """Basis values, shape (n_points, dim_space)."""
        xi = self.local_coords(x)
        if self.recurrence is None:
            return self._monomials(xi)
        return self._replay(xi, False)[0]

    def grad(self, x) -> np.ndarray:
        """Gradients in ambient coordinates, shape (n_points, dim_space, d)."""
        xi = self.local_coords(x)
        if self.recurrence is None:
            G = self._monomial_grads(xi)
        else:
            G = self._replay(xi, True)[1]
        return (G / self.scale) @ self.axes

    def project_values(self, rule: QuadratureRule, values: np.ndarray) -> np.ndarray:
        """L2 projection of data sampled at the rule's points.

        ``values`` has shape (n_points,) or (n_points, m); the result has
        shape (dim_space,) or (dim_space, m).
        """
        phi = self.eval(rule.points)
        rhs = (phi * rule.weights[:, None]).T @ values
        return solve_mass(self.mass, rhs)


ElementBasis = PolynomialBasis
FaceBasis = PolynomialBasis


def solve_mass(mass, rhs):
    try:
        c = sla.cho_factor(mass)
    except np.linalg.LinAlgError as exc:
        raise ConditioningError("mass matrix is not positive definite") from exc
    return sla.cho_solve(c, rhs)


def _orthonormal_recurrence(xi, w, exponents):
    """Modified Gram-Schmidt (two passes) in the discrete inner product of
    the rule, generating each new function from an earlier one times a
    coordinate."""
    n = len(exponents)
    index = {tuple(e): i for i, e in enumerate(exponents)}
    parent = np.zeros(n, dtype=int)
    axis = np.zeros(n, dtype=int)
    H = np.zeros((n, n))
    norm = np.zeros(n)
    sw = np.sqrt(w)
    Q = np.empty((len(w), n))
    norm[0] = np.sqrt(w.sum())
    Q[:, 0] = sw / norm[0]
    for j in range(1, n):
        e = exponents[j]
        a = int(np.flatnonzero(e)[0])
        pe = e.copy()
        pe[a] -= 1
        p = index[tuple(pe)]
        parent[j], axis[j] = p, a
        v = xi[:, a] * Q[:, p]
        norm0 = np.linalg.norm(v)
        for _ in range(2):
            for i in range(j):
                c = Q[:, i] @ v
                v -= c * Q[:, i]
                H[i, j] += c
        nrm = np.linalg.norm(v)
        if nrm <= BREAKDOWN_TOL * norm0 or nrm == 0.0:
            raise ConditioningError(
                f"Gram-Schmidt breakdown at basis function {j} "
                f"(relative norm {nrm / norm0 if norm0 else 0.0:.3e})"
            )
        norm[j] = nrm
        Q[:, j] = v / nrm
    for arr in (parent, axis, H, norm):
        arr.flags.writeable = False
    return Recurrence(parent, axis, H, norm)


def make_basis(center, axes, scale, degree, rule: QuadratureRule,
               orthonormalize: bool | None = None) -> PolynomialBasis:
    """Build a basis of P_degree over the region sampled by ``rule``.

    ``rule`` must integrate polynomials of degree 2*degree exactly.
    """
    if degree < 0:
        raise ValueError("polynomial degree must be >= 0")
    if orthonormalize is None:
        orthonormalize = degree >= ORTHONORMALIZE_FROM
    center = np.asarray(center, dtype=float)
    axes = np.atleast_2d(np.asarray(axes, dtype=float))
    raw = PolynomialBasis(degree, center, axes, float(scale), None, np.empty((0, 0)))
    rec = None
    if orthonormalize:
        xi = raw.local_coords(rule.points)
        rec = _orthonormal_recurrence(xi, rule.weights, raw.exponents)
    basis = PolynomialBasis(degree, center, axes, float(scale), rec, np.empty((0, 0)))
    V = basis.eval(rule.points)
    mass = (V * rule.weights[:, None]).T @ V
    mass = 0.5 * (mass + mass.T)
    mass.flags.writeable = False
    return PolynomialBasis(degree, center, axes, float(scale), rec, mass)


def build_element_basis(mesh, element: int, r: int, orthonormalize: bool | None = None,
                        rule: QuadratureRule | None = None) -> PolynomialBasis:
    """Basis of P_r(T); default orthonormalisation for r >= 6."""
    T = mesh.elements[element]
    if rule is None:
        rule = element_quadrature(mesh, element, 2 * r)
    return make_basis(T.centroid, np.eye(mesh.dim), T.diameter, r, rule, orthonormalize)


def build_face_basis(mesh, face: int, k: int, orthonormalize: bool | None = None,
                     rule: QuadratureRule | None = None) -> PolynomialBasis:
    """Basis of P_k(e) in the face's tangent frame."""
    f = mesh.faces[face]
    if rule is None:
        rule = face_quadrature(mesh, face, 2 * k)
    return make_basis(f.centroid, f.local_frame, f.diameter, k, rule, orthonormalize)


def l2_project_element(f, mesh, element: int, r: int | None = None, *,
                       basis: PolynomialBasis | None = None, degree: int = 14) -> np.ndarray:
    """Coefficients of the L2 projection of ``f`` onto P_r(T).

    ``f`` maps points (n, d) to values (n,) or (n, m).  ``degree`` is the
    quadrature degree used for the moments; it is raised to at least
    2*r so polynomial data of degree <= r is reproduced exactly.
    """
    if basis is None:
        basis = build_element_basis(mesh, element, r)
    rule = element_quadrature(mesh, element, max(degree, 2 * basis.degree))
    return basis.project_values(rule, np.asarray(f(rule.points)))


def l2_project_face(g, mesh, face: int, k: int | None = None, *,
                    basis: PolynomialBasis | None = None, degree: int = 14) -> np.ndarray:
    """Coefficients of the L2 projection of ``g`` onto P_k(e)."""
    if basis is None:
        basis = build_face_basis(mesh, face, k)
    rule = face_quadrature(mesh, face, max(degree, 2 * basis.degree))
    return basis.project_values(rule, np.asarray(g(rule.points)))
