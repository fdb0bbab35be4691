"""Quadrature on simplices, polytopal elements and faces.

Simplex rules are collapsed tensor Gauss rules (Duffy transform).  The
collapsed directions use Gauss-Jacobi points so the Jacobian factor of the
collapse is absorbed into the weight.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import ceil

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

MAX_DEGREE = 40


class UnsupportedDegreeError(ValueError):
    pass


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray  # (n, d)
    weights: np.ndarray  # (n,)
    exact_degree: int

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Integrate values sampled at the points (first axis)."""
        return np.tensordot(self.weights, values, axes=(0, 0))


def _check_degree(degree):
    if degree < 0 or degree > MAX_DEGREE:
        raise UnsupportedDegreeError(
            f"quadrature degree {degree} outside supported range [0, {MAX_DEGREE}]"
        )


@lru_cache(maxsize=None)
def _gauss_jacobi01(n, alpha):
    # rule for int_0^1 (1-t)^alpha g(t) dt
    if alpha == 0:
        x, w = roots_legendre(n)
    else:
        x, w = roots_jacobi(n, alpha, 0.0)
    return (x + 1.0) / 2.0, w / 2.0 ** (alpha + 1)


@lru_cache(maxsize=None)
def _gauss_legendre01(degree):
    _check_degree(degree)
    n = max(1, ceil((degree + 1) / 2))
    return _gauss_jacobi01(n, 0)


def line_quadrature(degree: int) -> QuadratureRule:
    """Gauss-Legendre rule on [0, 1]."""
    t, w = _gauss_legendre01(degree)
    return QuadratureRule(t[:, None].copy(), w.copy(), degree)


@lru_cache(maxsize=None)
def _simplex_rule(d, degree):
    _check_degree(degree)
    n = max(1, ceil((degree + 1) / 2))
    if d == 2:
        u, wu = _gauss_jacobi01(n, 1)
        v, wv = _gauss_jacobi01(n, 0)
        U, V = np.meshgrid(u, v, indexing="ij")
        pts = np.stack([U, V * (1.0 - U)], axis=-1).reshape(-1, 2)
        wts = np.outer(wu, wv).ravel()
    elif d == 3:
        u, wu = _gauss_jacobi01(n, 2)
        v, wv = _gauss_jacobi01(n, 1)
        s, ws = _gauss_jacobi01(n, 0)
        U, V, S = np.meshgrid(u, v, s, indexing="ij")
        pts = np.stack(
            [U, V * (1.0 - U), S * (1.0 - U) * (1.0 - V)], axis=-1
        ).reshape(-1, 3)
        wts = np.einsum("i,j,k->ijk", wu, wv, ws).ravel()
    else:
        raise ValueError(f"simplex dimension must be 2 or 3, got {d}")
    pts.flags.writeable = False
    wts.flags.writeable = False
    return pts, wts


def simplex_quadrature(d: int, degree: int) -> QuadratureRule:
    """Rule on the reference simplex exact for total degree ``degree``.

    The reference triangle is (0,0),(1,0),(0,1); the reference tetrahedron
    adds (0,0,1).
    """
    pts, wts = _simplex_rule(d, degree)
    return QuadratureRule(pts, wts, degree)


def map_simplex_rule(rule: QuadratureRule, vertices: np.ndarray):
    """Affinely map a reference rule onto the simplex with given vertices.

    ``vertices`` is (d+1, D) with D >= d (triangles embedded in 3D allowed).
    Returns points (n, D) and weights (n,).
    """
    vertices = np.asarray(vertices, dtype=float)
    d = rule.points.shape[1]
    J = (vertices[1:] - vertices[0]).T  # (D, d)
    pts = vertices[0] + rule.points @ J.T
    if J.shape[0] == d:
        jac = abs(np.linalg.det(J))
    else:
        jac = np.sqrt(abs(np.linalg.det(J.T @ J)))
    return pts, rule.weights * jac


def composite_rule(simplices: np.ndarray, degree: int) -> QuadratureRule:
    """Composite rule over a list of simplices (m, d+1, D)."""
    simplices = np.asarray(simplices, dtype=float)
    ref = simplex_quadrature(simplices.shape[1] - 1, degree)
    pts, wts = [], []
    for s in simplices:
        p, w = map_simplex_rule(ref, s)
        pts.append(p)
        wts.append(w)
    return QuadratureRule(np.concatenate(pts), np.concatenate(wts), degree)


def element_quadrature(mesh, element, degree: int) -> QuadratureRule:
    """Composite rule over the stored simplex decomposition of an element."""
    simplices = mesh.vertices[np.asarray(mesh.elements[element].simplices)]
    return composite_rule(simplices, degree)


def face_quadrature(mesh, face, degree: int) -> QuadratureRule:
    """Rule on a face: Gauss-Legendre on a 2D edge, fan of triangles in 3D."""
    f = mesh.faces[face]
    xs = mesh.vertices[list(f.vertex_ids)]
    if mesh.dim == 2:
        t, w = _gauss_legendre01(degree)
        pts = xs[0] + t[:, None] * (xs[1] - xs[0])
        return QuadratureRule(pts, w * f.measure, degree)
    tris = np.array([[xs[0], xs[i], xs[i + 1]] for i in range(1, len(xs) - 1)])
    return composite_rule(tris, degree)
