"""Interpolation operators on the reference tetrahedron and on meshes.

Every operator here is a linear map from samples of the (pulled back) field at
fixed reference points to local coefficients, so a global interpolant is one
pullback plus one contraction per element chunk.

pi_curl_s applies a scalar operator to each Cartesian component: vertex values,
then on every edge, face and the interior the L^2 best fit of the remaining
residual by the degree-p functions attached to that entity.  Such functions
vanish on the boundary of their entity, so the trace on an entity depends only on
the data there; tangential components along a face commute with the
componentwise operator, hence the global result is H(curl) conforming.

The commuting quartet uses the moment degrees of freedom of S_{p+1}, N_p, RT_p
and Z_p.  Stokes' theorem on each entity turns the degrees of freedom of a
derivative into degrees of freedom of the function, which gives
grad Pi^S = Pi^N grad, curl Pi^N = Pi^RT curl and div Pi^RT = Pi^Z div.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .femcore.quadrature import line_rule, tet_rule, tri_rule
from .femcore.reference import EDGES, FACES, REF_VERTICES, ReferenceElement, reference_element
from .femcore.spaces import FeSpace, chunks, pulled_back

CURL_KINDS = {"grad": "S", "curl": "N", "div": "RT", "L2": "Z"}


@dataclass(frozen=True)
class LocalOperator:
    """coeffs_i = sum_{s,c} R[i, s, c] u_c(points[s]) on the reference element."""
    kind: str          # target space: S, N, RT or Z
    p: int
    points: np.ndarray
    R: np.ndarray

    def apply(self, func):
        v = np.asarray(func(self.points))
        if v.ndim == 1:
            v = v[:, None]
        return np.einsum("isc,sc->i", self.R, v)


# ---------------------------------------------------------------- reference

@lru_cache(maxsize=None)
def commuting_operator(kind, p):
    """Moment (canonical) interpolant onto S_{p+1}, N_p, RT_p or Z_p."""
    space = CURL_KINDS.get(kind, kind)
    ref = reference_element(space, p)
    return LocalOperator(space, p, ref.dofs.points, ref.dofs.W)


def _entity_samples(deg):
    """Reference sample points grouped as vertices, edges, faces, interior."""
    groups = [("v", i, REF_VERTICES[i:i + 1], np.ones(1)) for i in range(4)]
    t, wt = line_rule(deg)
    for i, (a, b) in enumerate(EDGES):
        groups.append(("e", i, REF_VERTICES[a] + t[:, None] * (REF_VERTICES[b] - REF_VERTICES[a]), wt))
    st, ws = tri_rule(deg)
    for i, (a, b, c) in enumerate(FACES):
        x = (REF_VERTICES[a] + st[:, :1] * (REF_VERTICES[b] - REF_VERTICES[a])
             + st[:, 1:] * (REF_VERTICES[c] - REF_VERTICES[a]))
        groups.append(("f", i, x, ws))
    xq, wq = tet_rule(deg)
    groups.append(("i", 0, xq, wq))
    return groups


@lru_cache(maxsize=None)
def scalar_hierarchic_operator(p, deg=None):
    """(points, P) with P (dim P_p, nsamples): vertex values, then entity-wise L^2
    fits of the residual by the P_p dual functions of each entity (p >= 1)."""
    if p < 1:
        raise ValueError("the hierarchic operator needs p >= 1")
    deg = 2 * p + 8 if deg is None else deg
    ref = reference_element("S", p - 1)          # P_p with vertex/edge/face/interior dofs
    groups = _entity_samples(deg)
    pts = np.concatenate([g[2] for g in groups])
    ns = len(pts)
    Phi = ref.values(pts)[:, :, 0]               # (ns, dim)
    labels = ref.dofs.entity
    C = np.zeros((ref.dim, ns))
    start = 0
    for t, i, x, w in groups:
        rows = slice(start, start + len(x))
        start += len(x)
        own = [j for j, lab in enumerate(labels) if lab == (t, i)]
        if not own:
            continue
        # residual samples of the current approximation on this entity
        S = np.zeros((len(x), ns))
        S[:, rows] = np.eye(len(x))
        res = S - Phi[rows] @ C
        if t == "v":
            C[own] = res
            continue
        B = Phi[rows][:, own]
        G = B.T @ (w[:, None] * B)
        if np.linalg.cond(G) > 1e12:
            raise np.linalg.LinAlgError("degenerate constrained projection on %s%d" % (t, i))
        C[own] = np.linalg.solve(G, B.T @ (w[:, None] * res))
    return pts, C


@lru_cache(maxsize=None)
def curl_s_operator(p):
    """Pi^{curl,s}: componentwise scalar operator, result in (P_p)^3 within N_p,
    expressed in N_p dofs.  p = 0 falls back to the canonical interpolant."""
    if p == 0:
        return commuting_operator("curl", 0)
    pts, C = scalar_hierarchic_operator(p)
    ref_s = reference_element("S", p - 1)
    ref_n = reference_element("N", p)
    Phi_n = ref_s.values(ref_n.dofs.points)[:, :, 0]          # (qN, dimS)
    R = np.zeros((ref_n.dim, len(pts), 3))
    for c in range(3):
        Q = ref_n.dofs.W[:, :, c] @ Phi_n                     # N dofs of phi_j e_c
        R[:, :, c] = Q @ C
    return LocalOperator("N", p, pts, R)


def pi_curl_s(p, u):
    """N_p coefficients of Pi^{curl,s} u on the reference element."""
    return curl_s_operator(p).apply(u)


def pi_commuting(kind, p, u):
    """Coefficients of Pi^{grad,c}, Pi^{curl,c}, Pi^{div,c} or Pi^{L2} on the
    reference element (kind 'grad', 'curl', 'div', 'L2')."""
    if kind not in CURL_KINDS:
        raise ValueError("kind must be one of %s" % list(CURL_KINDS))
    return commuting_operator(kind, p).apply(u)


def scalar_interpolate(p, f):
    """P_p coefficients (S_{p-1} basis) of the scalar hierarchic operator."""
    pts, C = scalar_hierarchic_operator(p)
    return C @ np.asarray(f(pts))


# ---------------------------------------------------------------- global

def _pull_back(space_kind, x, J, vals):
    """Reference-element values of a physical field sampled at x = F(xhat)."""
    if space_kind == "S":
        return vals
    if space_kind == "N":
        return np.einsum("eqcd,eqc->eqd", J, vals)             # J^T u
    det = np.linalg.det(J)
    if space_kind == "RT":
        return det[..., None] * np.linalg.solve(J, vals[..., None])[..., 0]
    return det * vals


def global_interpolate(mesh, p, u, kind="curl_s", return_mismatch=False):
    """(FeSpace, coefficients) of the element-by-element interpolant of the physical
    field u (callable x -> values).  kind: 'curl_s', 'grad', 'curl', 'div', 'L2'.
    Shared dofs get the mean of the element values; with return_mismatch the
    largest disagreement between them is returned too (zero up to rounding for
    these trace-local operators)."""
    op = curl_s_operator(p) if kind == "curl_s" else commuting_operator(kind, p)
    space = FeSpace(mesh, op.kind, p)
    acc = None
    for el in chunks(mesh.n_elements, 2000):
        x, J = mesh.geometry(op.points, el)
        vals = np.asarray(u(x.reshape(-1, 3)))
        vals = vals.reshape(x.shape[:2] + vals.shape[1:])
        ref_vals = _pull_back(op.kind, x, J, vals)
        if ref_vals.ndim == 2:
            ref_vals = ref_vals[..., None]
        loc = np.einsum("isc,esc->ei", op.R, ref_vals).astype(complex)
        if acc is None:
            acc = dict(s=np.zeros(space.ndof, complex), n=np.zeros(space.ndof),
                       lo=np.full((2, space.ndof), np.inf), hi=np.full((2, space.ndof), -np.inf))
        dm = space.dofmap[el]
        np.add.at(acc["s"], dm, loc)
        np.add.at(acc["n"], dm, 1)
        for j, part in enumerate((loc.real, loc.imag)):
            np.minimum.at(acc["lo"][j], dm, part)
            np.maximum.at(acc["hi"][j], dm, part)
    coeffs = acc["s"] / acc["n"]
    mismatch = float(np.max(acc["hi"] - acc["lo"]))
    if not np.iscomplexobj(vals):
        coeffs = coeffs.real
    if return_mismatch:
        return space, coeffs, mismatch
    return space, coeffs


def interpolation_error(space, coeffs, u, curl_u=None, k=1.0, degree=None):
    """L^2 error and (for N) curl error of an FE function against a physical field."""
    p = space.p
    xq, wq = tet_rule(degree or 2 * p + 8)
    e2, c2 = 0.0, 0.0
    for el in chunks(space.mesh.n_elements, 1500):
        x, adet, val, der = pulled_back(space, xq, el)
        c = coeffs[space.dofmap[el]]
        uh = np.einsum("eqi...,ei->eq...", val, c)
        ex = np.asarray(u(x.reshape(-1, 3))).reshape(uh.shape)
        w = adet * wq
        e2 += float(np.sum(w * np.sum(abs(uh - ex).reshape(w.shape + (-1,)) ** 2, axis=-1)))
        if curl_u is not None and der is not None:
            ch = np.einsum("eqi...,ei->eq...", der, c)
            cx = np.asarray(curl_u(x.reshape(-1, 3))).reshape(ch.shape)
            c2 += float(np.sum(w * np.sum(abs(ch - cx).reshape(w.shape + (-1,)) ** 2, axis=-1)))
    return np.sqrt(e2), np.sqrt(c2)


# ---------------------------------------------------------------- commuting checks

class RandomTrigField:
    """Random smooth scalar phi and vector u with closed-form derivatives:
    phi = sum alpha_j sin(w_j.x + c_j), u = sum a_j sin(w_j.x + c_j)."""

    def __init__(self, seed=0, nterms=4, scale=2.0):
        rng = np.random.default_rng(seed)
        self.w = scale * rng.standard_normal((nterms, 3))
        self.c = rng.uniform(0, 2 * np.pi, nterms)
        self.alpha = rng.standard_normal(nterms)
        self.a = rng.standard_normal((nterms, 3))

    def _arg(self, x):
        return np.asarray(x, float) @ self.w.T + self.c

    def scalar(self, x):
        return np.sin(self._arg(x)) @ self.alpha

    def grad(self, x):
        return np.cos(self._arg(x)) @ (self.alpha[:, None] * self.w)

    def vector(self, x):
        return np.sin(self._arg(x)) @ self.a

    def curl(self, x):
        return np.cos(self._arg(x)) @ np.cross(self.w, self.a)

    def div(self, x):
        return np.cos(self._arg(x)) @ np.einsum("jc,jc->j", self.w, self.a)


@lru_cache(maxsize=None)
def _accurate_elements(p, qdeg):
    return tuple(ReferenceElement(k, p, qdeg) for k in ("S", "N", "RT", "Z"))


def commuting_defects(p, field, npts=60, seed=1, qdeg=40):
    """Relative defects of grad Pi^S = Pi^N grad, curl Pi^N = Pi^RT curl and
    div Pi^RT = Pi^Z div for one field, sampled on the reference element.  The
    identities hold for exact moments, so the moments use a rule of degree qdeg."""
    S, N, R, Z = _accurate_elements(p, qdeg)
    x = np.random.default_rng(seed).dirichlet(np.ones(4), npts)[:, 1:]
    cS = S.interpolate(field.scalar)
    cN_grad = N.interpolate(field.grad)
    cN = N.interpolate(field.vector)
    cR_curl = R.interpolate(field.curl)
    cR = R.interpolate(field.vector)
    cZ_div = Z.interpolate(field.div)

    def rel(a, b):
        return float(np.max(abs(a - b)) / max(np.max(abs(b)), 1e-300))

    ev = lambda tab, c: np.einsum("qi...,i->q...", tab, c)
    return {
        "grad": rel(ev(S.grad(x), cS), ev(N.values(x), cN_grad)),
        "curl": rel(ev(N.curl(x), cN), ev(R.values(x), cR_curl)),
        "div": rel(ev(R.div(x), cR), ev(Z.values(x)[:, :, 0], cZ_div)),
    }
