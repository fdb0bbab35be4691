"""Polytopal meshes: representation, generators, validation and JSON I/O.

A mesh is immutable once built.  Faces (edges in 2D) are shared between
elements; each face stores its unit normal pointing out of the first element
that references it, and each element records a +1/-1 orientation sign per
face so that ``sign * face.normal`` is always the element's outward normal.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

GEOM_TOL = 1e-12


class MeshError(ValueError):
    pass


@dataclass(frozen=True)
class Face:
    vertex_ids: tuple
    boundary: bool
    normal: np.ndarray
    measure: float
    centroid: np.ndarray
    local_frame: np.ndarray  # (d-1, d) orthonormal tangent rows
    diameter: float


@dataclass(frozen=True)
class Element:
    vertex_ids: tuple  # CCW loop in 2D, vertex set in 3D
    face_ids: tuple
    orientation: tuple
    centroid: np.ndarray
    diameter: float
    measure: float
    simplices: tuple
    convex: bool

    @property
    def N(self) -> int:
        return len(self.face_ids)

    @property
    def h(self) -> float:
        return self.diameter


@dataclass(frozen=True)
class PolyMesh:
    dim: int
    vertices: np.ndarray
    faces: tuple
    elements: tuple
    face_elements: tuple = field(repr=False)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def h(self) -> float:
        return max(e.diameter for e in self.elements)

    def boundary_faces(self) -> list[int]:
        return [i for i, f in enumerate(self.faces) if f.boundary]

    def to_dict(self) -> dict:
        elems = []
        for e in self.elements:
            elems.append(
                {
                    "faces": list(e.face_ids),
                    "simplices": [list(s) for s in e.simplices],
                    "convex": bool(e.convex),
                    "vertices": list(e.vertex_ids),
                    "orientation": list(e.orientation),
                }
            )
        return {
            "dim": self.dim,
            "vertices": self.vertices.tolist(),
            "faces": [
                {"verts": list(f.vertex_ids), "boundary": bool(f.boundary)}
                for f in self.faces
            ],
            "elements": elems,
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()), encoding="utf-8")


# --------------------------------------------------------------------------
# geometry helpers


def polygon_area(xy: np.ndarray) -> float:
    """Signed shoelace area of a polygon loop (positive if CCW)."""
    x, y = xy[:, 0], xy[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def simplex_measure(pts: np.ndarray) -> float:
    pts = np.asarray(pts, dtype=float)
    J = (pts[1:] - pts[0]).T
    d = J.shape[1]
    fact = 2.0 if d == 2 else 6.0
    if J.shape[0] == d:
        return abs(np.linalg.det(J)) / fact
    return np.sqrt(abs(np.linalg.det(J.T @ J))) / fact


def _diameter(pts):
    diff = pts[:, None, :] - pts[None, :, :]
    return float(np.sqrt((diff**2).sum(-1)).max())


def _canonical_sign(v):
    for c in v:
        if abs(c) > GEOM_TOL:
            return 1.0 if c > 0 else -1.0
    return 1.0


def _newell_normal(pts):
    n = np.zeros(3)
    for a, b in zip(pts, np.roll(pts, -1, axis=0)):
        n += np.cross(a, b)
    return n


def _face_frame(pts: np.ndarray) -> np.ndarray:
    """Translation-invariant tangent frame owned by the face."""
    if pts.shape[1] == 2:
        t = pts[1] - pts[0]
        t = t / np.linalg.norm(t)
        return (t * _canonical_sign(t))[None, :]
    n = _newell_normal(pts)
    n = n / np.linalg.norm(n)
    n = n * _canonical_sign(n)
    order = sorted(range(len(pts)), key=lambda i: tuple(pts[i]))
    t1 = pts[order[1]] - pts[order[0]]
    t1 = t1 - np.dot(t1, n) * n
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(n, t1)
    return np.stack([t1, t2])


def _ccw_turns(xy):
    a = np.roll(xy, 1, axis=0)
    c = np.roll(xy, -1, axis=0)
    e1, e2 = xy - a, c - xy
    return e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]


def is_convex_polygon(xy: np.ndarray) -> bool:
    xy = np.asarray(xy, dtype=float)
    scale = _diameter(xy) ** 2
    turns = _ccw_turns(xy) * np.sign(polygon_area(xy))
    return bool(np.all(turns >= -GEOM_TOL * scale))


def is_convex_polyhedron(pts: np.ndarray, face_loops: list) -> bool:
    c = pts.mean(axis=0)
    scale = _diameter(pts)
    for loop in face_loops:
        fp = pts[loop]
        n = _newell_normal(fp)
        n /= np.linalg.norm(n)
        if np.dot(n, fp.mean(axis=0) - c) < 0:
            n = -n
        if np.any((pts - fp[0]) @ n > GEOM_TOL * scale):
            return False
    return True


def _segments_intersect(p1, p2, q1, q2, tol):
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1, d2 = orient(q1, q2, p1), orient(q1, q2, p2)
    d3, d4 = orient(p1, p2, q1), orient(p1, p2, q2)
    if ((d1 > tol and d2 < -tol) or (d1 < -tol and d2 > tol)) and (
        (d3 > tol and d4 < -tol) or (d3 < -tol and d4 > tol)
    ):
        return True
    return False


def triangulate_element(xy) -> list[tuple[int, int, int]]:
    """Ear-clipping triangulation of a simple polygon loop.

    Returns index triples into the loop, each triangle counter-clockwise.
    Raises MeshError for degenerate (zero-area) or self-intersecting loops.
    """
    xy = np.asarray(xy, dtype=float)
    n = len(xy)
    if n < 3:
        raise MeshError("polygon needs at least 3 vertices")
    scale = _diameter(xy)
    area = polygon_area(xy)
    if abs(area) <= GEOM_TOL * scale**2:
        raise MeshError("degenerate polygon (zero area)")
    tol = GEOM_TOL * scale**2
    for i in range(n):
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            if _segments_intersect(xy[i], xy[(i + 1) % n], xy[j], xy[(j + 1) % n], tol):
                raise MeshError(f"self-intersecting polygon (edges {i} and {j})")

    idx = list(range(n)) if area > 0 else list(range(n))[::-1]
    tris = []

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    def inside(p, a, b, c):
        return cross(a, b, p) >= -tol and cross(b, c, p) >= -tol and cross(c, a, p) >= -tol

    guard = 0
    while len(idx) > 3:
        m = len(idx)
        clipped = False
        for t in range(m):
            i0, i1, i2 = idx[t - 1], idx[t], idx[(t + 1) % m]
            a, b, c = xy[i0], xy[i1], xy[i2]
            if cross(a, b, c) <= tol:
                continue
            others = (idx[s] for s in range(m) if idx[s] not in (i0, i1, i2))
            if any(inside(xy[o], a, b, c) for o in others):
                continue
            tris.append((i0, i1, i2))
            idx.pop(t)
            clipped = True
            break
        guard += 1
        if not clipped or guard > 10 * n:
            raise MeshError("ear clipping failed: polygon is not simple")
    tris.append(tuple(idx))
    return tris


# --------------------------------------------------------------------------
# construction


def _build(dim, vertices, cells, loaded_faces=None):
    """Assemble a PolyMesh.

    cells: list of dicts with keys ``loops`` (face vertex loops; for 2D the
    element vertex loop given as ``loop``), ``simplices`` and optionally
    ``convex``.
    """
    vertices = np.asarray(vertices, dtype=float)
    vertices.flags.writeable = False
    face_index: dict = {}
    face_verts: list = []
    face_elems: list = []
    face_first_loop: list = []

    elem_faces = []
    for ei, cell in enumerate(cells):
        if dim == 2:
            loop = list(cell["loop"])
            loops = [[loop[i], loop[(i + 1) % len(loop)]] for i in range(len(loop))]
        else:
            loops = [list(l) for l in cell["loops"]]
        fids = []
        for lp in loops:
            key = tuple(sorted(lp))
            fi = face_index.get(key)
            if fi is None:
                fi = len(face_verts)
                face_index[key] = fi
                if dim == 2:
                    a, b = lp
                    if tuple(vertices[b]) < tuple(vertices[a]):
                        a, b = b, a
                    face_verts.append((a, b))
                else:
                    face_verts.append(tuple(lp))
                face_elems.append([])
                face_first_loop.append(lp)
            face_elems[fi].append(ei)
            fids.append(fi)
        elem_faces.append((fids, loops))

    if loaded_faces is not None:
        # keep the file's face numbering and vertex order
        remap = {}
        new_verts = []
        for new_id, fv in enumerate(loaded_faces):
            key = tuple(sorted(fv))
            if key not in face_index:
                raise MeshError(f"face {new_id} in file is not referenced by any element")
            remap[face_index[key]] = new_id
            new_verts.append(tuple(fv))
        if len(remap) != len(face_verts):
            raise MeshError("element face loops do not match the face list")
        inv = {v: k for k, v in remap.items()}
        face_verts = new_verts
        face_elems = [face_elems[inv[i]] for i in range(len(new_verts))]
        face_first_loop = [face_first_loop[inv[i]] for i in range(len(new_verts))]
        elem_faces = [([remap[f] for f in fids], loops) for fids, loops in elem_faces]

    # element geometry
    elem_geo = []
    for ei, cell in enumerate(cells):
        simp = [tuple(int(v) for v in s) for s in cell["simplices"]]
        meas = [simplex_measure(vertices[list(s)]) for s in simp]
        total = float(sum(meas))
        cent = sum(m * vertices[list(s)].mean(axis=0) for m, s in zip(meas, simp)) / total
        if dim == 2:
            vids = tuple(cell["loop"])
        else:
            vids = tuple(sorted({v for lp in cell["loops"] for v in lp}))
        elem_geo.append((vids, simp, total, cent))

    faces = []
    for fi, fv in enumerate(face_verts):
        pts = vertices[list(fv)]
        first = face_elems[fi][0]
        if dim == 2:
            t = pts[1] - pts[0]
            L = float(np.linalg.norm(t))
            normal = np.array([t[1], -t[0]]) / L
            lp = face_first_loop[fi]
            # outward for a CCW loop traversed a->b is (dy, -dx)
            a, b = vertices[lp[0]], vertices[lp[1]]
            loop_xy = vertices[list(cells[first]["loop"])]
            ccw = polygon_area(loop_xy) > 0
            out = np.array([b[1] - a[1], a[0] - b[0]]) * (1 if ccw else -1)
            if np.dot(out, normal) < 0:
                normal = -normal
            measure, centroid, diam = L, pts.mean(axis=0), L
        else:
            nrm = _newell_normal(pts)
            measure = 0.5 * float(np.linalg.norm(nrm))
            normal = nrm / np.linalg.norm(nrm)
            tris = [pts[[0, i, i + 1]] for i in range(1, len(pts) - 1)]
            tw = np.array([simplex_measure(t) for t in tris])
            centroid = sum(w * t.mean(axis=0) for w, t in zip(tw, tris)) / tw.sum()
            diam = _diameter(pts)
            ec = elem_geo[first][3]
            if np.dot(normal, centroid - ec) < 0:
                normal = -normal
        normal.flags.writeable = False
        frame = _face_frame(pts)
        frame.flags.writeable = False
        faces.append(
            Face(
                vertex_ids=tuple(int(v) for v in fv),
                boundary=len(face_elems[fi]) == 1,
                normal=normal,
                measure=float(measure),
                centroid=centroid,
                local_frame=frame,
                diameter=float(diam),
            )
        )

    elements = []
    for ei, cell in enumerate(cells):
        fids, loops = elem_faces[ei]
        vids, simp, total, cent = elem_geo[ei]
        orient = tuple(1 if face_elems[f][0] == ei else -1 for f in fids)
        pts = vertices[list(vids)]
        if "convex" in cell and cell["convex"] is not None:
            convex = bool(cell["convex"])
        elif dim == 2:
            convex = is_convex_polygon(pts)
        else:
            loc = {v: i for i, v in enumerate(vids)}
            convex = is_convex_polyhedron(pts, [[loc[v] for v in lp] for lp in loops])
        elements.append(
            Element(
                vertex_ids=tuple(int(v) for v in vids),
                face_ids=tuple(fids),
                orientation=orient,
                centroid=cent,
                diameter=_diameter(pts),
                measure=total,
                simplices=tuple(simp),
                convex=convex,
            )
        )
    return PolyMesh(
        dim=dim,
        vertices=vertices,
        faces=tuple(faces),
        elements=tuple(elements),
        face_elements=tuple(tuple(fe) for fe in face_elems),
    )


def polygon_mesh(vertices, loops, convex=None) -> PolyMesh:
    """Build a 2D mesh from element vertex loops (either orientation)."""
    vertices = np.asarray(vertices, dtype=float)
    cells = []
    for i, loop in enumerate(loops):
        loop = list(loop)
        if polygon_area(vertices[loop]) < 0:
            loop = loop[::-1]
        tris = triangulate_element(vertices[loop])
        cells.append(
            {
                "loop": loop,
                "simplices": [tuple(loop[j] for j in t) for t in tris],
                "convex": None if convex is None else convex[i],
            }
        )
    return _build(2, vertices, cells)


def tet_mesh(vertices, tets) -> PolyMesh:
    cells = []
    for t in tets:
        t = list(t)
        loops = [[t[j] for j in range(4) if j != i] for i in range(4)]
        cells.append({"loops": loops, "simplices": [tuple(t)], "convex": True})
    return _build(3, vertices, cells)


def _check_level(level):
    if int(level) != level or level < 1:
        raise ValueError(f"level must be a positive integer, got {level}")
    return 2 ** (int(level) - 1)


def gen_triangular_grid(level: int) -> PolyMesh:
    """Uniform right-triangle grid of the unit square, diagonals of slope +1."""
    n = _check_level(level)
    g = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(g, g, indexing="ij")
    verts = np.stack([X.ravel(), Y.ravel()], axis=1)

    def vid(i, j):
        return i * (n + 1) + j

    loops = []
    for i in range(n):
        for j in range(n):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            loops += [(a, b, c), (a, c, d)]
    cells = [{"loop": lp, "simplices": [lp], "convex": True} for lp in loops]
    return _build(2, verts, cells)


# breakpoints of the zig-zag polyline splitting each unit cell
NONCONVEX_BREAKPOINTS = ((30 / 90, 75 / 90), (60 / 90, 15 / 90))


def gen_nonconvex_polygon_grid(level: int) -> PolyMesh:
    """Each square cell is cut by the polyline (0,0)-(1/3,5/6)-(2/3,1/6)-(1,1)
    into two nonconvex pentagons."""
    n = _check_level(level)
    g = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(g, g, indexing="ij")
    corners = np.stack([X.ravel(), Y.ravel()], axis=1)
    h = 1.0 / n
    (px, py), (qx, qy) = NONCONVEX_BREAKPOINTS
    extra = []
    loops = []
    nc = len(corners)

    def vid(i, j):
        return i * (n + 1) + j

    for i in range(n):
        for j in range(n):
            x0, y0 = g[i], g[j]
            p = nc + len(extra)
            extra.append((x0 + px * h, y0 + py * h))
            q = nc + len(extra)
            extra.append((x0 + qx * h, y0 + qy * h))
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            loops.append((a, b, c, q, p))
            loops.append((a, p, q, c, d))
    verts = np.vstack([corners, np.array(extra)])
    return polygon_mesh(verts, loops, convex=[False] * len(loops))


KUHN_PERMUTATIONS = tuple(itertools.permutations(range(3)))


def gen_kuhn_tet_grid(level: int) -> PolyMesh:
    """Unit cube split into n^3 cubes, each cut into the 6 Kuhn tetrahedra
    sharing the (0,0,0)-(1,1,1) diagonal."""
    n = _check_level(level)
    g = np.linspace(0.0, 1.0, n + 1)
    X, Y, Z = np.meshgrid(g, g, g, indexing="ij")
    verts = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)

    def vid(i, j, k):
        return (i * (n + 1) + j) * (n + 1) + k

    tets = []
    for i, j, k in itertools.product(range(n), repeat=3):
        for perm in KUHN_PERMUTATIONS:
            p = [i, j, k]
            tet = [vid(*p)]
            for axis in perm:
                p[axis] += 1
                tet.append(vid(*p))
            tets.append(tet)
    return tet_mesh(verts, tets)


GENERATORS = {
    "tri": gen_triangular_grid,
    "ncpoly2d": gen_nonconvex_polygon_grid,
    "tet3d": gen_kuhn_tet_grid,
}


# --------------------------------------------------------------------------
# I/O


def mesh_from_dict(data: dict) -> PolyMesh:
    dim = int(data["dim"])
    verts = np.asarray(data["vertices"], dtype=float)
    face_verts = [tuple(f["verts"]) for f in data["faces"]]
    cells = []
    for e in data["elements"]:
        loops = [face_verts[f] for f in e["faces"]]
        cell = {"simplices": e["simplices"], "convex": e.get("convex")}
        if dim == 2:
            if "vertices" in e:
                cell["loop"] = list(e["vertices"])
            else:
                cell["loop"] = _chain_edges(loops)
            if polygon_area(verts[cell["loop"]]) < 0:
                cell["loop"] = cell["loop"][::-1]
        else:
            cell["loops"] = loops
        cells.append(cell)
    mesh = _build(dim, verts, cells, loaded_faces=face_verts)
    for f, spec in zip(mesh.faces, data["faces"]):
        if bool(spec.get("boundary", f.boundary)) != f.boundary:
            raise MeshError("boundary flag in file disagrees with face incidence")
    return mesh


def _chain_edges(edges):
    edges = [list(e) for e in edges]
    loop = list(edges.pop(0))
    while edges:
        for i, (a, b) in enumerate(edges):
            if a == loop[-1]:
                loop.append(b)
            elif b == loop[-1]:
                loop.append(a)
            else:
                continue
            edges.pop(i)
            break
        else:
            raise MeshError("element edges do not form a closed loop")
    if loop[-1] != loop[0]:
        raise MeshError("element edges do not form a closed loop")
    return loop[:-1]


def load_mesh(path) -> PolyMesh:
    return mesh_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


# --------------------------------------------------------------------------
# validation


@dataclass
class Check:
    name: str
    passed: bool
    offenders: list = field(default_factory=list)


@dataclass
class MeshReport:
    checks: list

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def __str__(self):
        lines = []
        for c in self.checks:
            status = "pass" if c.passed else f"FAIL {c.offenders[:10]}"
            lines.append(f"{c.name:<22} {status}")
        return "\n".join(lines)


def _point_in_simplex(p, s, tol=1e-12):
    T = (s[1:] - s[0]).T
    lam = np.linalg.solve(T, p - s[0])
    bary = np.concatenate([[1 - lam.sum()], lam])
    return bool(np.all(bary > tol))


def validate_mesh(mesh: PolyMesh, domain_measure: float | None = 1.0, seed: int = 0,
                  disjoint_sample_limit: int = 200) -> MeshReport:
    """Check the structural and geometric invariants of a mesh.

    Returns a report with one entry per check listing offending entity ids
    (faces or elements).  Nothing is raised.
    """
    V = mesh.vertices
    d = mesh.dim
    checks = []

    counts = np.zeros(mesh.n_faces, dtype=int)
    for e in mesh.elements:
        for f in e.face_ids:
            counts[f] += 1
    bad = [
        i for i, f in enumerate(mesh.faces)
        if counts[i] != (1 if f.boundary else 2)
    ]
    checks.append(Check("face_incidence", not bad, bad))

    if domain_measure is not None:
        total = sum(e.measure for e in mesh.elements)
        ok = abs(total - domain_measure) <= 1e-12 * max(1.0, domain_measure)
        checks.append(Check("total_measure", ok, [] if ok else [total]))

    # closed boundary: sum of outward normal * measure vanishes per element
    bad_closed = []
    bad_orient = []
    for ei, e in enumerate(mesh.elements):
        acc = np.zeros(d)
        flux = 0.0
        for f, s in zip(e.face_ids, e.orientation):
            fc = mesh.faces[f]
            acc += s * fc.normal * fc.measure
            flux += s * np.dot(fc.normal, fc.centroid - e.centroid) * fc.measure
        if np.linalg.norm(acc) > 1e-12 * e.diameter ** (d - 1):
            bad_closed.append(ei)
        if abs(flux / d - e.measure) > 1e-10 * e.measure:
            bad_orient.append(ei)
    checks.append(Check("closed_boundary", not bad_closed, bad_closed))

    # orientation per face
    bad_faces = set()
    for ei, e in enumerate(mesh.elements):
        for f, s in zip(e.face_ids, e.orientation):
            fc = mesh.faces[f]
            n_out = s * fc.normal
            if d == 2:
                loop = list(e.vertex_ids)
                a, b = fc.vertex_ids
                ia = loop.index(a)
                if loop[(ia + 1) % len(loop)] == b:
                    t = V[b] - V[a]
                else:
                    t = V[a] - V[b]
                expected = np.array([t[1], -t[0]])
                if np.dot(expected, n_out) <= 0:
                    bad_faces.add(f)
            elif e.convex:
                if np.dot(n_out, fc.centroid - e.centroid) <= 0:
                    bad_faces.add(f)
            elif ei in bad_orient:
                bad_faces.update(e.face_ids)
    checks.append(Check("orientation", not bad_faces, sorted(bad_faces)))

    bad_n = []
    bad_plane = []
    for i, f in enumerate(mesh.faces):
        pts = V[list(f.vertex_ids)]
        if abs(np.linalg.norm(f.normal) - 1.0) > 1e-14:
            bad_n.append(i)
            continue
        tang = pts[1:] - pts[0]
        if np.any(np.abs(tang @ f.normal) > 1e-12 * f.diameter):
            if d == 3 and len(pts) > 3:
                bad_plane.append(i)
            bad_n.append(i)
    checks.append(Check("face_normals", not bad_n, bad_n))
    if d == 3:
        checks.append(Check("face_planarity", not bad_plane, bad_plane))

    bad_dec = []
    for ei, e in enumerate(mesh.elements):
        m = sum(simplex_measure(V[list(s)]) for s in e.simplices)
        if d == 2:
            ref = abs(polygon_area(V[list(e.vertex_ids)]))
        else:
            ref = _polyhedron_volume(mesh, e)
        if abs(m - ref) > 1e-12 * ref or abs(e.measure - ref) > 1e-12 * ref:
            bad_dec.append(ei)
    checks.append(Check("decomposition", not bad_dec, bad_dec))

    # simplices pairwise interior-disjoint: sampled centroid membership
    rng = np.random.default_rng(seed)
    bad_dis = []
    multi = [i for i, e in enumerate(mesh.elements) if len(e.simplices) > 1]
    if len(multi) > disjoint_sample_limit:
        multi = sorted(rng.choice(multi, disjoint_sample_limit, replace=False).tolist())
    for ei in multi:
        simp = [V[list(s)] for s in mesh.elements[ei].simplices]
        for a, sa in enumerate(simp):
            probes = [sa.mean(axis=0)] + [
                w @ sa for w in rng.dirichlet(np.ones(d + 1), size=4)
            ]
            if any(_point_in_simplex(p, sb) for p in probes
                   for b, sb in enumerate(simp) if b != a):
                bad_dis.append(ei)
                break
    checks.append(Check("simplices_disjoint", not bad_dis, bad_dis))

    bad_cvx = []
    for ei, e in enumerate(mesh.elements):
        pts = V[list(e.vertex_ids)]
        if d == 2:
            direct = is_convex_polygon(pts)
        else:
            loc = {v: i for i, v in enumerate(e.vertex_ids)}
            loops = [[loc[v] for v in mesh.faces[f].vertex_ids] for f in e.face_ids]
            direct = is_convex_polyhedron(pts, loops)
        if direct != e.convex:
            bad_cvx.append(ei)
    checks.append(Check("convexity_flag", not bad_cvx, bad_cvx))
    return MeshReport(checks)


def _polyhedron_volume(mesh, e):
    vol = 0.0
    for f, s in zip(e.face_ids, e.orientation):
        fc = mesh.faces[f]
        vol += s * np.dot(fc.normal, fc.centroid - e.centroid) * fc.measure / 3.0
    return vol
