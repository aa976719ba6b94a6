"""Tetrahedral meshes of the unit ball.

Macro mesh: the octahedron |x|_1 <= 1/2 split into 8 tetrahedra at the origin,
and the shell 1/2 <= |x|_1 <= 1 as 8 prisms, each cut into 3 tetrahedra by the
minimum-vertex rule so that shared quadrilaterals agree.  Uniform refinement is
the Kuhn/Freudenthal subdivision of each macro tetrahedron in ascending vertex
order (conforming because induced face subdivisions only depend on that order).

The curved map is F_K = Phi o A_K with Phi the identity on the octahedron and,
on the shell, the blend along rays from the origin
    Phi(x) = x ((1 - t) rho0/|x|_1 + t/|x|),  t = (|x|_1 - rho0)/(1 - rho0),
which fixes |x|_1 = rho0 and sends |x|_1 = 1 onto the unit sphere.  The new
radius is linear in t with slope 1 - rho0/|w|_1 >= 1 - rho0 along the ray w.
With p_geo set, Phi o A_K is replaced by its Lagrange interpolant of that degree.
"""

from dataclasses import dataclass, field
from itertools import permutations

import numpy as np

from .quadrature import tet_rule
from .reference import EDGES, FACES, lagrange_basis, lattice_points

RHO0 = 0.5


def macro_mesh():
    """(vertices (13, 3), tets (32, 4) ascending, octant sign per tet, shell flag)."""
    V = [np.zeros(3)]
    for r in (RHO0, 1.0):
        for a in range(3):
            for s in (1, -1):
                e = np.zeros(3)
                e[a] = s * r
                V.append(e)
    V = np.array(V)

    def vid(r, a, s):
        return 1 + (0 if r == RHO0 else 6) + 2 * a + (0 if s > 0 else 1)

    tets, sig, shell = [], [], []
    for sx in (1, -1):
        for sy in (1, -1):
            for sz in (1, -1):
                s = (sx, sy, sz)
                inner = [vid(RHO0, a, s[a]) for a in range(3)]
                outer = [vid(1.0, a, s[a]) for a in range(3)]
                tets.append(sorted([0] + inner))
                sig.append(s)
                shell.append(False)
                for t in _split_prism(inner, outer):
                    tets.append(sorted(t))
                    sig.append(s)
                    shell.append(True)
    return V, np.array(tets), np.array(sig, float), np.array(shell)


def _split_prism(bottom, top):
    """Min-vertex split of the prism (b0 b1 b2 / t0 t1 t2), t_i above b_i."""
    cols = [(bottom[i], top[i]) for i in range(3)]
    v = min(bottom + top)
    i0 = [i for i in range(3) if v in cols[i]][0]
    order = [i0, (i0 + 1) % 3, (i0 + 2) % 3]
    flip = v == cols[i0][1]
    P = [cols[i][1] if flip else cols[i][0] for i in order] + [cols[i][0] if flip else cols[i][1] for i in order]
    V1, V2, V3, V4, V5, V6 = P
    if min(V2, V6) < min(V3, V5):
        return [(V1, V2, V3, V6), (V1, V2, V6, V5), (V1, V5, V6, V4)]
    return [(V1, V2, V3, V5), (V1, V5, V3, V6), (V1, V5, V6, V4)]


def _kuhn_pieces(n):
    """Sub-simplices of {1 >= t1 >= t2 >= t3 >= 0} on the n-lattice, as integer points."""
    out = []
    for c in np.ndindex(n, n, n):
        c = np.array(c)
        for perm in permutations(range(3)):
            pts = [c.copy()]
            for a in perm:
                q = pts[-1].copy()
                q[a] += 1
                pts.append(q)
            cen = np.mean(pts, axis=0)
            if cen[0] > cen[1] > cen[2]:
                out.append(pts)
    return np.array(out)  # (n^3, 4, 3)


def phi_map(x, sigma=None):
    """Radial blending map and its Jacobian at points x (npts, 3)."""
    x = np.asarray(x, float)
    sig = np.sign(x) if sigma is None else np.broadcast_to(sigma, x.shape)
    n1 = np.sum(sig * x, axis=1)
    r = np.linalg.norm(x, axis=1)
    t = np.clip((n1 - RHO0) / (1 - RHO0), 0.0, None)
    shell = t > 0
    rs = np.where(r > 0, r, 1.0)
    ns = np.where(shell, n1, 1.0)
    g = np.where(shell, (1 - t) * RHO0 / ns + t / rs, 1.0)
    y = g[:, None] * x
    a = (1 / rs - RHO0 / ns) / (1 - RHO0) - (1 - t) * RHO0 / ns ** 2
    dg = sig * a[:, None] - (t / rs ** 3)[:, None] * x
    dg[~shell] = 0
    J = g[:, None, None] * np.eye(3) + x[:, :, None] * dg[:, None, :]
    return y, J


@dataclass
class Mesh:
    vertices: np.ndarray          # affine (pre-map) coordinates
    tets: np.ndarray              # (ne, 4), ascending vertex ids
    sigma: np.ndarray             # octant signs per element (for the shell map)
    shell: np.ndarray             # bool per element
    refinement: int = 0
    p_geo: int | None = None
    edges: np.ndarray = field(init=False)
    faces: np.ndarray = field(init=False)
    tet_edges: np.ndarray = field(init=False)
    tet_faces: np.ndarray = field(init=False)
    boundary_faces: np.ndarray = field(init=False)

    def __post_init__(self):
        T = self.tets
        if np.any(np.diff(T, axis=1) <= 0):
            raise ValueError("element vertex ids must be strictly ascending")
        e = np.stack([T[:, list(p)] for p in EDGES], 1).reshape(-1, 2)
        self.edges, inv = np.unique(e, axis=0, return_inverse=True)
        self.tet_edges = inv.reshape(-1, 6)
        f = np.stack([T[:, list(p)] for p in FACES], 1).reshape(-1, 3)
        self.faces, inv, cnt = np.unique(f, axis=0, return_inverse=True, return_counts=True)
        self.tet_faces = inv.reshape(-1, 4)
        self.boundary_faces = np.nonzero(cnt == 1)[0]

    @property
    def n_elements(self):
        return len(self.tets)

    # ---------------------------------------------------------------- maps
    def affine(self):
        """A_K (ne, 3, 3) with columns v_i - v_0 and shift v_0."""
        P = self.vertices[self.tets]
        return np.transpose(P[:, 1:] - P[:, :1], (0, 2, 1)), P[:, 0]

    def geometry(self, xhat, elements=None):
        """Physical points (ne, nq, 3) and Jacobians (ne, nq, 3, 3) of F_K."""
        el = np.arange(self.n_elements) if elements is None else np.asarray(elements)
        A, b = self.affine()
        A, b = A[el], b[el]
        y = np.einsum("ecd,qd->eqc", A, xhat) + b[:, None, :]
        J = np.broadcast_to(A[:, None], (len(el), len(xhat), 3, 3)).copy()
        x = y.copy()
        sh = self.shell[el]
        if not np.any(sh):
            return x, J
        if self.p_geo is None:
            ys = y[sh].reshape(-1, 3)
            sg = np.repeat(self.sigma[el][sh], len(xhat), axis=0)
            xs, Js = phi_map(ys, sg)
            x[sh] = xs.reshape(-1, len(xhat), 3)
            J[sh] = np.einsum("eqcd,edk->eqck", Js.reshape(-1, len(xhat), 3, 3), A[sh])
        else:
            nodes = lattice_points(self.p_geo)
            yn = np.einsum("ecd,nd->enc", A[sh], nodes) + b[sh][:, None, :]
            sg = np.repeat(self.sigma[el][sh], len(nodes), axis=0)
            Xn = phi_map(yn.reshape(-1, 3), sg)[0].reshape(-1, len(nodes), 3)
            N, dN = lagrange_basis(self.p_geo, xhat)
            x[sh] = np.einsum("qn,enc->eqc", N, Xn)
            J[sh] = np.einsum("qnd,enc->eqcd", dN, Xn)
        return x, J

    def mapped_vertices(self):
        x, _ = phi_map(self.vertices)
        return x

    # ---------------------------------------------------------------- measures
    def h_elements(self):
        X = self.mapped_vertices()[self.tets]
        d = [np.linalg.norm(X[:, a] - X[:, b], axis=1) for a, b in EDGES]
        return np.max(d, axis=0)

    def h(self):
        return float(self.h_elements().max())

    def shape_ratios(self):
        """h_K / (inradius) of the affine simplices through the mapped vertices."""
        X = self.mapped_vertices()[self.tets]
        vol = abs(np.einsum("ei,ei->e", X[:, 1] - X[:, 0], np.cross(X[:, 2] - X[:, 0], X[:, 3] - X[:, 0]))) / 6
        area = sum(0.5 * np.linalg.norm(np.cross(X[:, b] - X[:, a], X[:, c] - X[:, a]), axis=1) for a, b, c in FACES)
        return self.h_elements() / (3 * vol / area)

    def det_report(self, degree=None):
        """(min, max) over quadrature points of det F_K' times the sign of det A_K."""
        xq, _ = tet_rule(degree or 2 * (self.p_geo or 2) + 3)
        _, J = self.geometry(xq)
        d = np.linalg.det(J)
        sgn = np.sign(np.linalg.det(self.affine()[0]))
        d = d * sgn[:, None]
        return float(d.min()), float(d.max())

    def volume(self, degree=None):
        xq, wq = tet_rule(degree or 2 * (self.p_geo or 4) + 2)
        _, J = self.geometry(xq)
        return float(np.sum(abs(np.linalg.det(J)) @ wq))


def build_ball_mesh(refinement, p_geo=None):
    """Macro mesh refined into refinement^3 tetrahedra per macro element
    (refinement 0 or 1 both give the 32-element macro mesh)."""
    if refinement < 0:
        raise ValueError("refinement >= 0 required")
    n = max(1, int(refinement))
    V0, T0, S0, SH0 = macro_mesh()
    pieces = _kuhn_pieces(n) / n  # (n^3, 4, 3) Kuhn coordinates
    allpts, tets, sig, shell = [], [], [], []
    for t, s, sh in zip(T0, S0, SH0):
        P = V0[t]
        # Kuhn vertices 0, e1, e1+e2, e1+e2+e3 -> P0..P3
        M = np.stack([P[1] - P[0], P[2] - P[1], P[3] - P[2]], axis=1)
        X = P[0] + np.einsum("cd,kvd->kvc", M, pieces)
        allpts.append(X.reshape(-1, 3))
        sig.append(np.repeat([s], len(pieces), 0))
        shell.append(np.repeat(sh, len(pieces)))
    allpts = np.concatenate(allpts)
    key = np.round(allpts * 4 * n).astype(np.int64)  # lattice coordinates are multiples of 1/(2n)
    uniq, inv = np.unique(key, axis=0, return_inverse=True)
    verts = uniq / (4.0 * n)
    tets = np.sort(inv.reshape(-1, 4), axis=1)
    return Mesh(verts, tets, np.concatenate(sig), np.concatenate(shell), n, p_geo)


# ---------------------------------------------------------------- file i/o

def write_ballmesh(mesh, path):
    """ASCII `ballmesh v1`: affine vertex coordinates (the radial map is implied),
    then tets with a flag marking elements that touch the sphere."""
    touch = np.zeros(mesh.n_elements, int)
    bf = set(mesh.boundary_faces.tolist())
    for e in range(mesh.n_elements):
        if any(f in bf for f in mesh.tet_faces[e]):
            touch[e] = 1
    with open(path, "w") as fh:
        fh.write("ballmesh v1\n%d\n" % len(mesh.vertices))
        for v in mesh.vertices:
            fh.write("%r %r %r\n" % tuple(float(c) for c in v))
        fh.write("%d\n" % mesh.n_elements)
        for t, f in zip(mesh.tets, touch):
            fh.write("%d %d %d %d %d\n" % (*t, f))


def read_ballmesh(path, p_geo=None):
    with open(path) as fh:
        if fh.readline().strip() != "ballmesh v1":
            raise ValueError("not a ballmesh v1 file")
        nv = int(fh.readline())
        V = np.array([[float(c) for c in fh.readline().split()] for _ in range(nv)])
        ne = int(fh.readline())
        rows = np.array([[int(c) for c in fh.readline().split()] for _ in range(ne)])
    T = np.sort(rows[:, :4], axis=1)
    cen = V[T].mean(axis=1)
    shell = np.sum(abs(cen), axis=1) > RHO0 + 1e-12
    sig = np.where(cen >= 0, 1.0, -1.0)
    return Mesh(V, T, sig, shell, 0, p_geo)
