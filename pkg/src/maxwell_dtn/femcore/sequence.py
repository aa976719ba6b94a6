"""Discrete exact sequence S_{p+1} -> N_p -> RT_p -> Z_p: reference checks,
global derivative matrices and conformity (jump) checks."""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .quadrature import tet_rule, tri_rule
from .reference import FACES, REF_VERTICES, diff_matrix, reference_element
from .spaces import FeSpace, chunks, pulled_back


@dataclass
class SequenceReport:
    p: int
    grad_inclusion: float
    curl_inclusion: float
    div_inclusion: float
    div_curl: float
    curl_grad: float
    rank_grad: int
    rank_curl: int
    dims: dict

    @property
    def ranks_ok(self):
        d = self.dims
        return self.rank_grad == d["S"] - 1 and self.rank_curl == d["N"] - (d["S"] - 1)

    def ok(self, tol=1e-10):
        return self.ranks_ok and max(self.grad_inclusion, self.curl_inclusion, self.div_inclusion,
                                     self.div_curl, self.curl_grad) <= tol


def _fit_residual(target, basis):
    """Relative least-squares residual of target columns in span(basis columns)."""
    coef, *_ = np.linalg.lstsq(basis, target, rcond=None)
    return float(np.max(np.linalg.norm(target - basis @ coef, axis=0))
                 / max(np.max(np.linalg.norm(target, axis=0)), 1e-300))


def _rank(A, rtol=1e-10):
    s = np.linalg.svd(A, compute_uv=False)
    return int(np.sum(s > rtol * s[0])) if s.size and s[0] > 0 else 0


def _poly_curl(coef, deg):
    """Monomial coefficients of curl for coef (n, 3, nm)."""
    D = [diff_matrix(deg, a) for a in range(3)]
    d = lambda a, c: coef[:, c] @ D[a].T
    return np.stack([d(1, 2) - d(2, 1), d(2, 0) - d(0, 2), d(0, 1) - d(1, 0)], axis=1)


def exact_sequence_check(p, npts=None, seed=0):
    """Inclusions by least-squares fits at random points, rank identities by SVD,
    and div curl = 0, curl grad = 0 on the monomial coefficients (relative)."""
    S, N, R, Z = (reference_element(k, p) for k in ("S", "N", "RT", "Z"))
    rng = np.random.default_rng(seed)
    npts = npts or 4 * N.dim
    x = rng.dirichlet(np.ones(4), npts)[:, 1:]
    flat = lambda v: v.transpose(0, 2, 1).reshape(-1, v.shape[1])    # (npts*ncomp, nb)
    gS, vN, cN, vR, dR = S.grad(x), N.values(x), N.curl(x), R.values(x), R.div(x)
    vZ = Z.values(x)[:, :, 0]
    grad_inc = _fit_residual(flat(gS), flat(vN))
    curl_inc = _fit_residual(flat(cN), flat(vR))
    div_inc = _fit_residual(dR, vZ)
    curl_coef = _poly_curl(N.coef, N.deg)
    D = [diff_matrix(N.deg, a) for a in range(3)]
    divcurl = float(np.max(abs(sum(curl_coef[:, a] @ D[a].T for a in range(3))))
                    / max(np.max(abs(curl_coef)), 1e-300))
    grad_coef = np.stack([S.coef[:, 0] @ diff_matrix(S.deg, a).T for a in range(3)], axis=1)
    curlgrad = float(np.max(abs(_poly_curl(grad_coef, S.deg))) / max(np.max(abs(grad_coef)), 1e-300))
    return SequenceReport(p, grad_inc, curl_inc, div_inc, divcurl, curlgrad,
                          _rank(flat(gS)), _rank(flat(cN)),
                          {"S": S.dim, "N": N.dim, "RT": R.dim, "Z": Z.dim})


# ---------------------------------------------------------------- global operators

def derivative_matrix(src_space, dst_space, return_mismatch=False):
    """Global sparse D with dst_coeffs = D src_coeffs for the exterior derivative.
    The transforms make the derivative of a pulled-back function the pull-back of
    the derivative, so one reference matrix serves every element."""
    pairs = {("S", "N"): "grad", ("N", "RT"): "curl", ("RT", "Z"): "div"}
    op = pairs.get((src_space.kind, dst_space.kind))
    if op is None or src_space.p != dst_space.p:
        raise ValueError("spaces do not form a link of the sequence")
    sref, dref = src_space.ref, dst_space.ref
    pts = dref.dofs.points
    der = {"grad": sref.grad, "curl": sref.curl, "div": lambda q: sref.div(q)[:, :, None]}[op](pts)
    D = np.einsum("iqc,qjc->ij", dref.dofs.W, der)
    D[abs(D) < 1e-13] = 0
    ne = src_space.mesh.n_elements
    rows = np.repeat(dst_space.dofmap, src_space.dofmap.shape[1], axis=1).ravel()
    cols = np.tile(src_space.dofmap, (1, dst_space.dofmap.shape[1])).ravel()
    vals = np.tile(D.ravel(), ne)
    keep = vals != 0
    rows, cols, vals = rows[keep], cols[keep], vals[keep]
    shape = (dst_space.ndof, src_space.ndof)
    # every element sharing a (row, col) pair writes it; store the mean
    cnt = sp.csr_matrix((np.ones(len(vals)), (rows, cols)), shape=shape)
    A = sp.csr_matrix((vals, (rows, cols)), shape=shape)
    A.data /= cnt.data
    if return_mismatch:
        return A, _spread(vals, rows, cols, shape)
    return A


def _spread(vals, rows, cols, shape):
    key = rows.astype(np.int64) * shape[1] + cols
    order = np.argsort(key, kind="stable")
    key, vals = key[order], vals[order]
    start = np.r_[0, np.nonzero(np.diff(key))[0] + 1]
    return float(np.max(np.maximum.reduceat(vals, start) - np.minimum.reduceat(vals, start), initial=0.0))


def inclusion_residual(src_space, dst_space, coeffs, degree=None):
    """max |d(u_h) - (D u_h)_h| at element quadrature points (relative)."""
    D = derivative_matrix(src_space, dst_space)
    c_dst = D @ coeffs
    xq, _ = tet_rule(degree or 2 * src_space.p + 4)
    worst, scale = 0.0, 0.0
    for el in chunks(src_space.mesh.n_elements, 1500):
        _, _, _, der = pulled_back(src_space, xq, el)
        _, _, val, _ = pulled_back(dst_space, xq, el)
        a = np.einsum("eqi...,ei->eq...", der, coeffs[src_space.dofmap[el]])
        b = np.einsum("eqi...,ei->eq...", val, c_dst[dst_space.dofmap[el]])
        worst = max(worst, float(np.max(abs(a - b))))
        scale = max(scale, float(np.max(abs(a))))
    return worst / max(scale, 1e-300)


# ---------------------------------------------------------------- conformity

def interior_face_pairs(mesh):
    """(face ids, (element, local face) for both sides) of interior faces."""
    f = mesh.tet_faces.ravel()
    el = np.repeat(np.arange(mesh.n_elements), 4)
    lf = np.tile(np.arange(4), mesh.n_elements)
    order = np.argsort(f, kind="stable")
    f, el, lf = f[order], el[order], lf[order]
    same = np.nonzero(f[1:] == f[:-1])[0]
    return f[same], (el[same], lf[same]), (el[same + 1], lf[same + 1])


def face_jumps(space, coeffs, degree=None):
    """Max over interior faces of the tangential (N) or normal (RT) jump, or the
    full jump (S), relative to the largest value sampled."""
    if space.kind == "Z":
        raise ValueError("Z carries no interelement continuity")
    st, _ = tri_rule(degree or 2 * space.p + 4)
    _, side1, side2 = interior_face_pairs(space.mesh)
    worst, scale = 0.0, 0.0
    for l1 in range(4):
        for l2 in range(4):
            sel = (side1[1] == l1) & (side2[1] == l2)
            if not np.any(sel):
                continue
            vals, geo = [], []
            for lf, els in ((l1, side1[0][sel]), (l2, side2[0][sel])):
                a, b, c = FACES[lf]
                t1, t2 = REF_VERTICES[b] - REF_VERTICES[a], REF_VERTICES[c] - REF_VERTICES[a]
                xh = REF_VERTICES[a] + st[:, :1] * t1 + st[:, 1:] * t2
                x, J = space.mesh.geometry(xh, els)
                _, _, v, _ = pulled_back(space, xh, els, geometry=(x, J))
                vals.append(np.einsum("eqi...,ei->eq...", v, coeffs[space.dofmap[els]]))
                geo.append((x, J @ t1, J @ t2))
            d = vals[0] - vals[1]
            x, T1, T2 = geo[0]
            if np.max(abs(x - geo[1][0])) > 1e-12:
                raise RuntimeError("face parametrizations disagree")
            if space.kind == "N":
                jump = np.stack([np.einsum("eqc,eqc->eq", d, T1), np.einsum("eqc,eqc->eq", d, T2)], -1)
            elif space.kind == "RT":
                nrm = np.cross(T1, T2)
                jump = np.einsum("eqc,eqc->eq", d, nrm / np.linalg.norm(nrm, axis=-1, keepdims=True))
            else:
                jump = d
            worst = max(worst, float(np.max(abs(jump))))
            scale = max(scale, float(np.max(abs(vals[0]))))
    return worst / max(scale, 1e-300)


def random_global_function(mesh, kind, p, seed=0):
    space = FeSpace(mesh, kind, p)
    return space, np.random.default_rng(seed).standard_normal(space.ndof)
