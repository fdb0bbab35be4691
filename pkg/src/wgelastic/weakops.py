"""Discrete weak strain tensor and weak divergence on a single element.

Local degrees of freedom of a weak function {v_0, v_b} are ordered as: the
interior block (component-major, each component a vector of P_k(T)
coefficients), then one block per face in the element's face order (again
component-major, P_k(e) coefficients in the face's own basis).

The weak strain is represented by its d(d+1)/2 unique components
(11, 22[, 33], 12[, 13, 23]), each a P_{r1}(T) coefficient vector holding the
actual matrix entry.  Off-diagonal components carry weight 2 in the Frobenius
inner product.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .basis import ConditioningError, PolynomialBasis, dim_poly, make_basis
from .quadrature import QuadratureRule, element_quadrature, face_quadrature

DEFAULT_OVERSAMPLE = 14

SYM_COMPONENTS = {
    2: ((0, 0), (1, 1), (0, 1)),
    3: ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)),
}


def sym_weights(d: int) -> np.ndarray:
    return np.array([1.0 if i == j else 2.0 for i, j in SYM_COMPONENTS[d]])


class InvalidDegreeError(ValueError):
    pass


def select_degrees(element, k: int, policy="paper", r1=None, r2=None) -> tuple[int, int]:
    """Degrees (r1, r2) of the weak strain and weak divergence spaces.

    ``policy="paper"`` gives N+k-1 on convex elements and 2N+k-1 on
    nonconvex ones, N being the number of faces.  ``policy="override"``
    returns (r1, r2) as given, which must be at least k-1.
    """
    if k < 1:
        raise InvalidDegreeError(f"k must be >= 1, got {k}")
    if policy == "paper":
        r = element.N + k - 1 if element.convex else 2 * element.N + k - 1
        return r, r
    if policy == "override":
        if r1 is None or r2 is None:
            raise InvalidDegreeError("override policy needs both r1 and r2")
        if r1 < k - 1 or r2 < k - 1:
            raise InvalidDegreeError(f"r1={r1}, r2={r2} below k-1={k - 1}")
        return int(r1), int(r2)
    raise InvalidDegreeError(f"unknown degree policy {policy!r}")


@dataclass(frozen=True)
class LocalDofLayout:
    k: int
    d: int
    n_faces: int

    @property
    def n_scalar_interior(self) -> int:
        return dim_poly(self.k, self.d)

    @property
    def n_scalar_face(self) -> int:
        return dim_poly(self.k, self.d - 1)

    @property
    def n_interior(self) -> int:
        return self.d * self.n_scalar_interior

    @property
    def n_face(self) -> int:
        return self.d * self.n_scalar_face

    @property
    def total(self) -> int:
        return self.n_interior + self.n_faces * self.n_face

    def interior(self, comp: int) -> slice:
        n = self.n_scalar_interior
        return slice(comp * n, (comp + 1) * n)

    def face_block(self, j: int) -> slice:
        start = self.n_interior + j * self.n_face
        return slice(start, start + self.n_face)

    def face(self, j: int, comp: int) -> slice:
        n = self.n_scalar_face
        start = self.n_interior + j * self.n_face + comp * n
        return slice(start, start + n)


@dataclass(frozen=True)
class LocalSpace:
    """Bases and quadrature needed on one element.

    Everything is expressed for the element the space was built on; a
    geometrically congruent translate reuses it by shifting data points by
    ``centroid - origin``.
    """

    element: int
    origin: np.ndarray
    k: int
    r1: int
    r2: int
    layout: LocalDofLayout
    interior: PolynomialBasis
    strain: PolynomialBasis
    div: PolynomialBasis
    faces: tuple  # PolynomialBasis per local face
    normals: np.ndarray  # outward unit normal per local face
    rule: QuadratureRule
    face_rules: tuple
    data_rule: QuadratureRule
    h: float
    face_measures: np.ndarray


def build_local_space(mesh, element: int, k: int, r1: int, r2: int,
                      quad_degree: int | None = None,
                      oversample: int | None = None) -> LocalSpace:
    T = mesh.elements[element]
    d = mesh.dim
    if quad_degree is None:
        quad_degree = 2 * max(r1, r2, k + 1) + 2
    if oversample is None:
        oversample = max(2 * k + 6, DEFAULT_OVERSAMPLE)
    rule = element_quadrature(mesh, element, quad_degree)
    eye = np.eye(d)
    interior = make_basis(T.centroid, eye, T.diameter, k, rule, True)
    strain = make_basis(T.centroid, eye, T.diameter, r1, rule, True)
    div = strain if r2 == r1 else make_basis(T.centroid, eye, T.diameter, r2, rule, True)
    fbases, frules, normals = [], [], []
    for f, s in zip(T.face_ids, T.orientation):
        fc = mesh.faces[f]
        fr = face_quadrature(mesh, f, quad_degree)
        fbases.append(make_basis(fc.centroid, fc.local_frame, fc.diameter, k, fr, True))
        frules.append(fr)
        normals.append(s * fc.normal)
    data_deg = max(oversample, 2 * max(r1, r2, k))
    data_rule = rule if data_deg <= quad_degree else element_quadrature(mesh, element, data_deg)
    return LocalSpace(
        element=element,
        origin=T.centroid.copy(),
        k=k,
        r1=r1,
        r2=r2,
        layout=LocalDofLayout(k, d, T.N),
        interior=interior,
        strain=strain,
        div=div,
        faces=tuple(fbases),
        normals=np.array(normals),
        rule=rule,
        face_rules=tuple(frules),
        data_rule=data_rule,
        h=T.diameter,
        face_measures=np.array([mesh.faces[f].measure for f in T.face_ids]),
    )


def _solve(M, R):
    try:
        return sla.cho_solve(sla.cho_factor(M), R)
    except np.linalg.LinAlgError as exc:
        raise ConditioningError("singular mass matrix in weak operator") from exc


def weak_strain_operator(space: LocalSpace):
    """Matrix E mapping local DOFs to weak-strain coefficients, and M_sym.

    Rows of E are ordered component-major over the symmetric components.
    For each test function phi = S_c p_b the right-hand side is
    -(v_0, div phi)_T + <v_b, phi n>_{dT}; E solves M_sym E = R.
    """
    d = space.layout.d
    lay = space.layout
    comps = SYM_COMPONENTS[d]
    w = sym_weights(d)
    nr = space.strain.dim_space
    rule = space.rule
    psi = space.interior.eval(rule.points)
    dp = space.strain.grad(rule.points)
    B = np.einsum("q,qa,qbl->abl", rule.weights, psi, dp)  # (nk, nr, d)
    R = np.zeros((len(comps) * nr, lay.total))
    for c, (i, j) in enumerate(comps):
        rows = slice(c * nr, (c + 1) * nr)
        if i == j:
            R[rows, lay.interior(i)] -= B[:, :, i].T
        else:
            R[rows, lay.interior(i)] -= B[:, :, j].T
            R[rows, lay.interior(j)] -= B[:, :, i].T
    for fj, (fb, fr, n) in enumerate(zip(space.faces, space.face_rules, space.normals)):
        chi = fb.eval(fr.points)
        p = space.strain.eval(fr.points)
        F = (p * fr.weights[:, None]).T @ chi  # (nr, nf)
        for c, (i, j) in enumerate(comps):
            rows = slice(c * nr, (c + 1) * nr)
            if i == j:
                R[rows, lay.face(fj, i)] += n[i] * F
            else:
                R[rows, lay.face(fj, i)] += n[j] * F
                R[rows, lay.face(fj, j)] += n[i] * F
    M = space.strain.mass
    M_sym = np.kron(np.diag(w), M)
    E = np.vstack([
        _solve(M, R[c * nr:(c + 1) * nr]) / w[c] for c in range(len(comps))
    ])
    return E, M_sym


def weak_div_operator(space: LocalSpace):
    """Matrix D mapping local DOFs to weak-divergence coefficients, and M_div.

    Right-hand side: -(v_0, grad phi)_T + <v_b . n, phi>_{dT}.
    """
    lay = space.layout
    d = lay.d
    rule = space.rule
    psi = space.interior.eval(rule.points)
    dp = space.div.grad(rule.points)
    B = np.einsum("q,qa,qbl->abl", rule.weights, psi, dp)
    R = np.zeros((space.div.dim_space, lay.total))
    for i in range(d):
        R[:, lay.interior(i)] -= B[:, :, i].T
    for fj, (fb, fr, n) in enumerate(zip(space.faces, space.face_rules, space.normals)):
        chi = fb.eval(fr.points)
        p = space.div.eval(fr.points)
        F = (p * fr.weights[:, None]).T @ chi
        for i in range(d):
            R[:, lay.face(fj, i)] += n[i] * F
    M = space.div.mass
    return _solve(M, R), M


@dataclass(frozen=True)
class LocalWeakOps:
    space: LocalSpace
    E: np.ndarray
    M_sym: np.ndarray
    D: np.ndarray
    M_div: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def r1(self):
        return self.space.r1

    @property
    def r2(self):
        return self.space.r2

    @property
    def layout(self):
        return self.space.layout

    def strain_gram(self) -> np.ndarray:
        """E^T M_sym E, i.e. the bilinear form (eps_w u, eps_w v)_T."""
        if "sg" not in self._cache:
            self._cache["sg"] = self.E.T @ self.M_sym @ self.E
        return self._cache["sg"]

    def div_gram(self) -> np.ndarray:
        if "dg" not in self._cache:
            self._cache["dg"] = self.D.T @ self.M_div @ self.D
        return self._cache["dg"]


def local_ops(mesh, element: int, k: int, policy="paper", r1=None, r2=None,
              quad_degree=None, oversample=None) -> LocalWeakOps:
    r1, r2 = select_degrees(mesh.elements[element], k, policy, r1, r2)
    space = build_local_space(mesh, element, k, r1, r2, quad_degree, oversample)
    E, M_sym = weak_strain_operator(space)
    D, M_div = weak_div_operator(space)
    return LocalWeakOps(space, E, M_sym, D, M_div)


def strain_kernel_dim(ops: LocalWeakOps, rtol: float = 1e-9) -> int:
    """Number of local weak functions with zero weak strain.

    A stable choice of (r1, r2) leaves exactly the d(d+1)/2 rigid motions;
    anything more makes the global system singular or nearly so.
    """
    ev = np.linalg.eigvalsh(ops.strain_gram())
    return int(np.sum(ev <= rtol * ev.max()))


def local_stiffness(ops: LocalWeakOps, mu: float, lam: float) -> np.ndarray:
    """K_T = 2 mu E^T M_sym E + lam D^T M_div D."""
    if mu <= 0 or lam < 0:
        raise ValueError(f"need mu > 0 and lam >= 0, got mu={mu}, lam={lam}")
    K = 2.0 * mu * ops.strain_gram() + lam * ops.div_gram()
    return 0.5 * (K + K.T)


def geometry_key(mesh, element: int, *extra) -> tuple:
    """Hashable key equal for translated copies of an element.

    Local operators depend only on the element's shape relative to its
    centroid (face frames are translation invariant), so congruent
    translates can share them.
    """
    T = mesh.elements[element]
    V = mesh.vertices
    rel = np.round((V[list(T.vertex_ids)] - T.centroid) / T.diameter, 10) + 0.0
    loc = {v: i for i, v in enumerate(T.vertex_ids)}
    faces = tuple(tuple(loc[v] for v in mesh.faces[f].vertex_ids) for f in T.face_ids)
    return (rel.tobytes(), faces, T.convex, T.N, round(T.diameter, 12)) + extra


# --------------------------------------------------------------------------
# weak functions on one element


def interpolate_local(mesh, element: int, space: LocalSpace, u, degree=None) -> np.ndarray:
    """Local DOFs of Q_h u = {Q_0 u, Q_b u} on ``element``.

    ``u`` maps points (n, d) to values (n, d).  ``space`` may belong to a
    congruent translate of ``element``.
    """
    T = mesh.elements[element]
    shift = T.centroid - space.origin
    lay = space.layout
    out = np.zeros(lay.total)
    rule = space.data_rule
    vals = np.asarray(u(rule.points + shift))
    c0 = space.interior.project_values(rule, vals)
    for i in range(lay.d):
        out[lay.interior(i)] = c0[:, i]
    for j, (fb, fr) in enumerate(zip(space.faces, space.face_rules)):
        fv = np.asarray(u(fr.points + shift))
        cb = fb.project_values(fr, fv)
        for i in range(lay.d):
            out[lay.face(j, i)] = cb[:, i]
    return out


def polynomial_local_dofs(space: LocalSpace, coeffs: np.ndarray) -> np.ndarray:
    """DOFs of {w, w|dT} for w in [P_k(T)]^d given by interior coefficients
    (shape (n_scalar_interior, d)); traces are projected onto P_k(e), which
    is exact for polynomial w."""
    lay = space.layout
    out = np.zeros(lay.total)
    for i in range(lay.d):
        out[lay.interior(i)] = coeffs[:, i]
    for j, (fb, fr) in enumerate(zip(space.faces, space.face_rules)):
        vals = space.interior.eval(fr.points) @ coeffs
        cb = fb.project_values(fr, vals)
        for i in range(lay.d):
            out[lay.face(j, i)] = cb[:, i]
    return out


def strain_matrix_coeffs(space: LocalSpace, coeffs: np.ndarray) -> np.ndarray:
    """Reshape weak-strain coefficients (rows of E @ dofs) to (n_comp, n_r1)."""
    return coeffs.reshape(len(SYM_COMPONENTS[space.layout.d]), space.strain.dim_space)


def project_strain(space: LocalSpace, grad_fn, shift=None) -> np.ndarray:
    """Q_{r1} eps(u) for u with gradient ``grad_fn`` (points -> (n, d, d)),
    stacked like the rows of E."""
    rule = space.data_rule
    pts = rule.points if shift is None else rule.points + shift
    G = np.asarray(grad_fn(pts))
    comps = SYM_COMPONENTS[space.layout.d]
    vals = np.stack([0.5 * (G[:, i, j] + G[:, j, i]) for i, j in comps], axis=1)
    return space.strain.project_values(rule, vals).T.ravel()


def project_divergence(space: LocalSpace, grad_fn, shift=None) -> np.ndarray:
    """Q_{r2}(div u) as a coefficient vector."""
    rule = space.data_rule
    pts = rule.points if shift is None else rule.points + shift
    G = np.asarray(grad_fn(pts))
    return space.div.project_values(rule, np.trace(G, axis1=1, axis2=2))
