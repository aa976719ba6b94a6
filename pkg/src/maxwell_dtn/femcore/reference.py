"""Reference tetrahedron, monomial polynomial spaces and the four element families.

Vertices 0, e1, e2, e3.  Every degree of freedom is a moment on a vertex, edge,
face or the interior, written in the affine parameter of the entity taken in
ascending local vertex order.  Since the mesh always lists element vertices in
ascending global order, these functionals are intrinsic and no sign or
permutation fix-ups are needed when elements are glued together.
"""

from functools import lru_cache

import numpy as np

from .quadrature import line_rule, tet_rule, tri_rule

REF_VERTICES = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]])
EDGES = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
FACES = ((0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3))
KINDS = ("S", "N", "RT", "Z")


def dim_formula(kind, p):
    return {"S": (p + 2) * (p + 3) * (p + 4) // 6,
            "N": (p + 1) * (p + 3) * (p + 4) // 2,
            "RT": (p + 1) * (p + 2) * (p + 4) // 2,
            "Z": (p + 1) * (p + 2) * (p + 3) // 6}[kind]


# ---------------------------------------------------------------- monomials

@lru_cache(maxsize=None)
def monomials(deg, nvar=3):
    out = []
    for d in range(deg + 1):
        if nvar == 3:
            out += [(a, b, d - a - b) for a in range(d, -1, -1) for b in range(d - a, -1, -1)]
        elif nvar == 2:
            out += [(a, d - a) for a in range(d, -1, -1)]
        else:
            out.append((d,))
    return tuple(out)


def eval_monomials(deg, pts):
    """Monomials in the centred variable y = 2 (x - c), c the centroid of the
    reference simplex of matching dimension (much better conditioned than x)."""
    pts = np.atleast_2d(pts)
    d = pts.shape[1]
    y = 2.0 * (pts - 1.0 / (d + 1))
    e = np.array(monomials(deg, d))
    return np.prod(y[:, None, :] ** e[None, :, :], axis=2)


@lru_cache(maxsize=None)
def diff_matrix(deg, axis):
    """D with (D c) the coefficients of d/dx_axis of sum c_a y^a (dy/dx = 2)."""
    mons = monomials(deg)
    idx = {m: i for i, m in enumerate(mons)}
    D = np.zeros((len(mons), len(mons)))
    for j, m in enumerate(mons):
        if m[axis]:
            t = list(m)
            t[axis] -= 1
            D[idx[tuple(t)], j] = 2.0 * m[axis]
    return D


def _embed(small, deg):
    """Index of the degree-`small` monomials inside the degree-`deg` list."""
    idx = {m: i for i, m in enumerate(monomials(deg))}
    return np.array([idx[m] for m in monomials(small)], dtype=int)


def _mult_x(deg, axis):
    """Multiplication by x_axis, from degree deg-1 monomials to degree deg."""
    idx = {m: i for i, m in enumerate(monomials(deg))}
    src = monomials(deg - 1)
    A = np.zeros((len(idx), len(src)))
    for j, m in enumerate(src):
        t = list(m)
        t[axis] += 1
        A[idx[tuple(t)], j] = 1
    return A


# ---------------------------------------------------------------- spanning sets

def _span(kind, p):
    """Spanning set as rows of shape (ncomp * nm) over degree-D monomials."""
    if kind == "S":
        D = p + 1
        return np.eye(len(monomials(D))), D, 1
    if kind == "Z":
        return np.eye(len(monomials(p))), p, 1
    D = p + 1
    nm = len(monomials(D))
    full = _embed(p, D)
    rows = []
    for c in range(3):
        for i in full:
            r = np.zeros((3, nm))
            r[c, i] = 1
            rows.append(r.ravel())
    homog = [j for j, m in enumerate(monomials(p)) if sum(m) == p]
    X = [_mult_x(D, a) for a in range(3)]
    for j in homog:
        if kind == "N":
            # y cross (e_c m); y = 2(x - c) gives the same space as x cross P_p^3
            for c in range(3):
                r = np.zeros((3, nm))
                a, b = (c + 1) % 3, (c + 2) % 3
                r[a] += X[b][:, j]
                r[b] -= X[a][:, j]
                rows.append(r.ravel())
        else:
            r = np.stack([X[a][:, j] for a in range(3)])
            rows.append(r.ravel())
    R = np.array(rows)
    _, s, Vt = np.linalg.svd(R, full_matrices=False)
    rank = int(np.sum(s > 1e-10 * s[0]))
    return Vt[:rank], D, 3


# ---------------------------------------------------------------- dof functionals

def _line_test(n, s):
    """Shifted Legendre polynomials P_0..P_n at s in [0, 1] -> (len(s), n+1)."""
    return np.polynomial.legendre.legvander(2 * s - 1, n) if n >= 0 else np.zeros((len(s), 0))


def _tri_test(n, st):
    return eval_monomials(n, st) if n >= 0 else np.zeros((len(st), 0))


def _tet_test(n, x):
    return eval_monomials(n, x) if n >= 0 else np.zeros((len(x), 0))


class DofSet:
    """Functionals dof_i(u) = sum_q sum_c W[i, q, c] u_c(x_q) with entity labels."""

    def __init__(self, points, W, entity):
        self.points = points
        self.W = W
        self.entity = entity  # list of ("v"|"e"|"f"|"i", local index)

    def apply(self, values):
        values = np.asarray(values)
        if values.ndim == 1:
            values = values[:, None]
        return np.einsum("iqc,qc...->i...", self.W, values)


def _build_dofs(kind, p, qdeg):
    pts, blocks, ent = [], [], []
    ncomp = 3 if kind in ("N", "RT") else 1
    offset = 0

    def add(points, rows, labels):
        nonlocal offset
        pts.append(points)
        blocks.append((offset, rows))
        ent.extend(labels)
        offset += len(points)

    if kind == "S":
        for v in range(4):
            add(REF_VERTICES[v:v + 1], np.ones((1, 1, 1)), [("v", v)])
    ls, lw = line_rule(qdeg)
    ts, tw = tri_rule(qdeg)
    for e, (a, b) in enumerate(EDGES):
        t = REF_VERTICES[b] - REF_VERTICES[a]
        x = REF_VERTICES[a] + ls[:, None] * t
        if kind == "S":
            q = _line_test(p - 1, ls)
            rows = (lw[:, None] * q).T[:, :, None]
        elif kind == "N":
            q = _line_test(p, ls)
            rows = (lw[:, None] * q).T[:, :, None] * t[None, None, :]
        else:
            continue
        add(x, rows, [("e", e)] * rows.shape[0])
    for f, (a, b, c) in enumerate(FACES):
        t1, t2 = REF_VERTICES[b] - REF_VERTICES[a], REF_VERTICES[c] - REF_VERTICES[a]
        x = REF_VERTICES[a] + ts[:, :1] * t1 + ts[:, 1:] * t2
        if kind == "S":
            q = _tri_test(p - 2, ts)
            rows = (tw[:, None] * q).T[:, :, None]
        elif kind == "N":
            q = (tw[:, None] * _tri_test(p - 1, ts)).T
            rows = np.concatenate([q[:, :, None] * t1, q[:, :, None] * t2])
        elif kind == "RT":
            q = (tw[:, None] * _tri_test(p, ts)).T
            rows = q[:, :, None] * np.cross(t1, t2)[None, None, :]
        else:
            continue
        add(x, rows, [("f", f)] * rows.shape[0])
    xs, xw = tet_rule(qdeg)
    nint = {"S": p - 3, "N": p - 2, "RT": p - 1, "Z": p}[kind]
    q = (xw[:, None] * _tet_test(nint, xs)).T
    if kind in ("N", "RT"):
        rows = np.concatenate([q[:, :, None] * np.eye(3)[c] for c in range(3)])
    else:
        rows = q[:, :, None]
    if rows.shape[0]:
        add(xs, rows, [("i", 0)] * rows.shape[0])
    P = np.concatenate(pts)
    n = sum(r.shape[0] for _, r in blocks)
    W = np.zeros((n, len(P), ncomp))
    i = 0
    for off, rows in blocks:
        W[i:i + rows.shape[0], off:off + rows.shape[1]] = rows
        i += rows.shape[0]
    return DofSet(P, W, ent)


# ---------------------------------------------------------------- elements

class ReferenceElement:
    """Dual basis of `kind` in {S, N, RT, Z} (S carries degree p+1, Z degree p).

    coef has shape (dim, ncomp, nm) over the degree-`deg` monomials."""

    def __init__(self, kind, p, qdeg=None):
        if kind not in KINDS:
            raise ValueError("kind must be one of %s" % (KINDS,))
        if p < 0:
            raise ValueError("p >= 0 required")
        self.kind, self.p = kind, p
        self.qdeg = 2 * p + 14 if qdeg is None else qdeg
        span, self.deg, self.ncomp = _span(kind, p)
        self.nm = len(monomials(self.deg))
        self.dofs = _build_dofs(kind, p, self.qdeg)
        Mx = eval_monomials(self.deg, self.dofs.points)
        # dof matrix on monomial coefficient vectors (ncomp * nm)
        Dm = np.einsum("iqc,qm->icm", self.dofs.W, Mx).reshape(len(self.dofs.entity), -1)
        G = Dm @ span.T
        if G.shape[0] != G.shape[1]:
            raise RuntimeError("dof count %d != space dimension %d" % G.shape)
        self.coef = np.linalg.solve(G.T, span).reshape(-1, self.ncomp, self.nm)
        self.dim = self.coef.shape[0]
        self.span = span
        self.dof_matrix = Dm

    # -- counts per entity
    def entity_counts(self):
        c = {"v": 0, "e": 0, "f": 0, "i": 0}
        for t, _ in self.dofs.entity:
            c[t] += 1
        return c["v"] // 4, c["e"] // 6, c["f"] // 4, c["i"]

    # -- evaluation at reference points
    def values(self, pts):
        """(npts, dim, ncomp)"""
        return np.einsum("qm,icm->qic", eval_monomials(self.deg, pts), self.coef)

    def _deriv(self, axis):
        return np.einsum("icm,nm->icn", self.coef, diff_matrix(self.deg, axis))

    def grad(self, pts):
        M = eval_monomials(self.deg, pts)
        return np.stack([M @ self._deriv(a)[:, 0].T for a in range(3)], axis=2)

    def curl(self, pts):
        M = eval_monomials(self.deg, pts)
        d = [[M @ self._deriv(a)[:, c].T for c in range(3)] for a in range(3)]  # d[a][c] = d_a u_c
        return np.stack([d[1][2] - d[2][1], d[2][0] - d[0][2], d[0][1] - d[1][0]], axis=2)

    def div(self, pts):
        M = eval_monomials(self.deg, pts)
        return sum(M @ self._deriv(a)[:, a].T for a in range(3))

    # -- coefficients of a polynomial (ncomp, nm') in this basis via the dofs
    def dofs_of_poly(self, coef, deg):
        vals = np.einsum("qm,cm->qc", eval_monomials(deg, self.dofs.points), np.atleast_2d(coef))
        return self.dofs.apply(vals)[:, 0]

    def interpolate(self, func):
        """Canonical interpolant: dof values of func (callable on (n, 3) points)."""
        v = np.asarray(func(self.dofs.points))
        if v.ndim == 1:
            v = v[:, None]
        return np.einsum("iqc,qc->i", self.dofs.W, v)


@lru_cache(maxsize=None)
def reference_element(kind, p):
    return ReferenceElement(kind, p)


def reference_basis(kind, p):
    return reference_element(kind, p)


def lattice_points(m):
    """Barycentric lattice of order m on the reference tet (Lagrange geometry nodes)."""
    if m == 0:
        return np.array([[0.25, 0.25, 0.25]])
    pts = [(i / m, j / m, l / m) for i, j, l in
           ((a, b, c) for a in range(m + 1) for b in range(m + 1 - a) for c in range(m + 1 - a - b))]
    return np.array(pts)


@lru_cache(maxsize=None)
def lagrange_inverse(m):
    return np.linalg.inv(eval_monomials(m, lattice_points(m)))


def lagrange_basis(m, pts):
    """Nodal basis values (npts, nn) and gradients (npts, nn, 3) of order m."""
    Vinv = lagrange_inverse(m)
    M = eval_monomials(m, pts)
    N = M @ Vinv
    dN = np.stack([M @ diff_matrix(m, a) @ Vinv for a in range(3)], axis=2)
    return N, dN


def check_tangential_degree(p):
    """Max degree of the tangential trace of N_p basis functions on each face
    in its own parameters.  The x cross P_p part makes this p + 1: the trace
    lies in the face Nedelec space, not in P_p."""
    el = reference_element("N", p)
    worst = 0
    s, t = np.meshgrid(np.linspace(0, 1, p + 6), np.linspace(0, 1, p + 6))
    st = np.stack([s.ravel(), t.ravel()], 1)
    st = st[st.sum(1) <= 1 + 1e-12]
    for (a, b, c) in FACES:
        t1, t2 = REF_VERTICES[b] - REF_VERTICES[a], REF_VERTICES[c] - REF_VERTICES[a]
        x = REF_VERTICES[a] + st[:, :1] * t1 + st[:, 1:] * t2
        vals = el.values(x)
        for tt in (t1, t2):
            y = vals @ tt
            for d in range(p + 3):
                V = eval_monomials(d, st)
                res = y - V @ np.linalg.lstsq(V, y, rcond=None)[0]
                if np.max(abs(res)) < 1e-10:
                    worst = max(worst, d)
                    break
            else:
                worst = max(worst, p + 3)
    return worst
