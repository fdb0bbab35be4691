"""Global degrees of freedom and sparse assembly of the weak Galerkin scheme.

Global numbering: all element interior blocks (element order), then all face
blocks (face order).  Boundary face DOFs are fixed to the L2 projection of the
boundary data and eliminated, which leaves a symmetric positive definite
system on the free DOFs.

Elements that are translates of each other share one set of local operators;
assembly and data evaluation are batched per such group.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp

from .basis import build_face_basis
from .quadrature import face_quadrature
from .weakops import (
    DEFAULT_OVERSAMPLE,
    LocalWeakOps,
    geometry_key,
    local_ops,
    InvalidDegreeError,
    local_stiffness,
    select_degrees,
    strain_kernel_dim,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DofMap:
    k: int
    d: int
    n_elements: int
    n_faces: int
    n_elem_block: int
    n_face_block: int
    boundary_dofs: np.ndarray
    free_dofs: np.ndarray

    @property
    def n_total(self) -> int:
        return self.n_elements * self.n_elem_block + self.n_faces * self.n_face_block

    @property
    def n_free(self) -> int:
        return len(self.free_dofs)

    def element_block(self, e: int) -> np.ndarray:
        return e * self.n_elem_block + np.arange(self.n_elem_block)

    def face_block(self, f: int) -> np.ndarray:
        start = self.n_elements * self.n_elem_block + f * self.n_face_block
        return start + np.arange(self.n_face_block)

    def element_dofs(self, mesh, e: int) -> np.ndarray:
        """Global indices of the local DOFs of element ``e`` (local layout order)."""
        parts = [self.element_block(e)]
        parts += [self.face_block(f) for f in mesh.elements[e].face_ids]
        return np.concatenate(parts)


def build_dofmap(mesh, k: int) -> DofMap:
    from .basis import dim_poly

    d = mesh.dim
    nbe = d * dim_poly(k, d)
    nbf = d * dim_poly(k, d - 1)
    base = mesh.n_elements * nbe
    bnd = [base + f * nbf + np.arange(nbf) for f in mesh.boundary_faces()]
    bnd = np.concatenate(bnd) if bnd else np.zeros(0, dtype=int)
    n_total = base + mesh.n_faces * nbf
    free = np.setdiff1d(np.arange(n_total), bnd)
    return DofMap(k, d, mesh.n_elements, mesh.n_faces, nbe, nbf, bnd, free)


@dataclass
class ElementGroup:
    """Elements sharing one set of local operators."""

    ops: LocalWeakOps
    elements: np.ndarray
    dofs: np.ndarray  # (m, n_local) global indices
    shifts: np.ndarray  # (m, d) centroid offsets from ops.space.origin

    def data_points(self) -> np.ndarray:
        """Data-rule points of every element, shape (m, n_q, d)."""
        return self.shifts[:, None, :] + self.space.data_rule.points[None]

    @property
    def space(self):
        return self.ops.space


def build_groups(mesh, dofmap: DofMap, k: int, policy="paper", r1=None, r2=None,
                 oversample=None, reuse=True) -> list[ElementGroup]:
    """Local operators for every element, shared across congruent translates."""
    by_key: dict = {}
    for e in range(mesh.n_elements):
        T = mesh.elements[e]
        degs = select_degrees(T, k, policy, r1, r2)
        key = geometry_key(mesh, e, degs) if reuse else ("elem", e)
        by_key.setdefault(key, []).append(e)
    groups = []
    for members in by_key.values():
        ops = local_ops(mesh, members[0], k, policy, r1, r2, oversample=oversample)
        n_rigid = mesh.dim * (mesh.dim + 1) // 2
        n_kernel = strain_kernel_dim(ops)
        if n_kernel > n_rigid:
            raise InvalidDegreeError(
                f"degrees (r1, r2) = ({ops.r1}, {ops.r2}) leave {n_kernel - n_rigid} "
                f"spurious zero-strain modes on element {members[0]}"
            )
        elems = np.array(members)
        dofs = np.stack([dofmap.element_dofs(mesh, e) for e in members])
        cents = np.stack([mesh.elements[e].centroid for e in members])
        groups.append(ElementGroup(ops, elems, dofs, cents - ops.space.origin))
    log.debug("%d elements share %d local operator sets", mesh.n_elements, len(groups))
    return groups


def scatter_matrix(groups, n_total, local_fn) -> sp.csr_matrix:
    """Sum local matrices ``local_fn(ops)`` into a global CSR matrix."""
    rows, cols, vals = [], [], []
    for g in groups:
        K = local_fn(g.ops)
        m, n = g.dofs.shape
        rows.append(np.repeat(g.dofs, n, axis=1).ravel())
        cols.append(np.tile(g.dofs, (1, n)).ravel())
        vals.append(np.broadcast_to(K.ravel(), (m, n * n)).ravel())
    A = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n_total, n_total),
    )
    return A.tocsr()


def load_vector(groups, dofmap: DofMap, f) -> np.ndarray:
    """Entries (f, v_0)_T for every interior test function; faces get 0."""
    b = np.zeros(dofmap.n_total)
    d = dofmap.d
    for g in groups:
        sp_ = g.space
        pts = g.data_points()
        m, nq, _ = pts.shape
        try:
            fv = np.asarray(f(pts.reshape(-1, d)), dtype=float).reshape(m, nq, d)
        except Exception as exc:  # surface the element for debugging
            raise ValueError(
                f"body force evaluation failed on element group starting at "
                f"element {g.elements[0]}"
            ) from exc
        psi = sp_.interior.eval(sp_.data_rule.points)
        loc = np.einsum("q,qa,mqi->mia", sp_.data_rule.weights, psi, fv)
        nk = psi.shape[1]
        b[g.dofs[:, : d * nk].ravel()] += loc.reshape(m, d * nk).ravel()
    return b


def apply_dirichlet(g, mesh, dofmap: DofMap, oversample: int | None = None) -> np.ndarray:
    """Full-length vector holding Q_b g on every boundary face block."""
    k = dofmap.k
    if oversample is None:
        oversample = max(2 * k + 6, DEFAULT_OVERSAMPLE)
    out = np.zeros(dofmap.n_total)
    if g is None:
        return out
    for f in mesh.boundary_faces():
        basis = build_face_basis(mesh, f, k, orthonormalize=True,
                                 rule=face_quadrature(mesh, f, 2 * k + 2))
        rule = face_quadrature(mesh, f, max(oversample, 2 * k))
        coeffs = basis.project_values(rule, np.asarray(g(rule.points), dtype=float))
        out[dofmap.face_block(f)] = coeffs.T.ravel()
    return out


@dataclass
class AssembledSystem:
    mesh: object
    dofmap: DofMap
    groups: list
    mu: float
    lam: float
    A_full: sp.csr_matrix
    A: sp.csr_matrix  # free-free block
    rhs: np.ndarray  # free part, boundary columns moved over
    boundary_values: np.ndarray  # full length

    @property
    def n_free(self) -> int:
        return self.dofmap.n_free

    def expand(self, x_free: np.ndarray) -> np.ndarray:
        x = self.boundary_values.copy()
        x[self.dofmap.free_dofs] = x_free
        return x

    def dump(self, directory) -> None:
        """Write A (Matrix Market) and rhs (plain text) for debugging."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        scipy.io.mmwrite(str(directory / "A.mtx"), self.A)
        np.savetxt(directory / "rhs.txt", self.rhs)


def assemble(mesh, k: int, mu: float, lam: float, f=None, g=None, *, policy="paper",
             r1=None, r2=None, oversample=None, reuse=True) -> AssembledSystem:
    """Assemble the stabiliser-free WG system for displacement boundary data.

    ``f`` (body force) and ``g`` (boundary displacement) map points (n, d) to
    values (n, d); ``None`` means zero.
    """
    if mu <= 0 or lam < 0:
        raise ValueError(f"need mu > 0 and lam >= 0, got mu={mu}, lam={lam}")
    dofmap = build_dofmap(mesh, k)
    groups = build_groups(mesh, dofmap, k, policy, r1, r2, oversample, reuse)
    A_full = scatter_matrix(groups, dofmap.n_total, lambda ops: local_stiffness(ops, mu, lam))
    b = load_vector(groups, dofmap, f) if f is not None else np.zeros(dofmap.n_total)
    xb = apply_dirichlet(g, mesh, dofmap, oversample)
    free, bnd = dofmap.free_dofs, dofmap.boundary_dofs
    A_rows = A_full[free]
    A = A_rows[:, free].tocsr()
    rhs = b[free] - A_rows[:, bnd] @ xb[bnd]
    return AssembledSystem(mesh, dofmap, groups, mu, lam, A_full, A, rhs, xb)
