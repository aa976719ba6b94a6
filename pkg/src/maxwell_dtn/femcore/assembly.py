"""Galerkin system for curl curl E - k^2 E with the truncated capacity operator.

A_k(u, v) = (curl u, curl v) - k^2 (u, v) - ik (T_k Pi_T u, Pi_T v)_Gamma.

The boundary term is handled in a real orthonormal basis R_j of tangential
vector spherical harmonics (l <= L_max).  With U[j, a] = (phi_a, R_j)_Gamma_h the
DtN block is U^T diag(-ik s_j) U, s_j the symbol of T_k on R_j; it is symmetric
because the basis functions are real.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.io
import scipy.sparse as sp

from ..dtn import _symbols_by_ell
from ..harmonics import TangentialSpectrum, mode_arrays, mode_index, nmodes, vsh_all
from .quadrature import tet_rule, tri_rule
from .reference import FACES, REF_VERTICES
from .spaces import FeSpace, chunks, pulled_back

CHUNK = 1500


def volume_degree(p):
    return 2 * (p + 1) + 3


def face_degree(p, L_max, n):
    """Per-face rule degree: 2p + 4 plus enough extra that the composite rule over
    the ~4n faces along a great circle resolves spherical degree 2 L_max + 2p."""
    return 2 * p + 4 + int(np.ceil((2 * L_max + 2 * p) / (2.0 * max(n, 1))))


# ---------------------------------------------------------------- volume

def assemble_volume(space, degree=None):
    """Real sparse (K, M): curl-curl and mass for N, grad-grad and mass for S."""
    if space.kind not in ("N", "S"):
        raise ValueError("volume assembly is for S and N spaces")
    need = volume_degree(space.p)
    degree = need if degree is None else degree
    if degree < need:
        raise ValueError("quadrature degree %d below the required %d" % (degree, need))
    xq, wq = tet_rule(degree)
    rows, cols, kv, mv = [], [], [], []
    for el in chunks(space.mesh.n_elements, CHUNK):
        _, adet, val, der = pulled_back(space, xq, el)
        w = adet * wq[None, :]
        if space.kind == "N":
            Ke = np.einsum("eq,eqic,eqjc->eij", w, der, der)
            Me = np.einsum("eq,eqic,eqjc->eij", w, val, val)
        else:
            Ke = np.einsum("eq,eqic,eqjc->eij", w, der, der)
            Me = np.einsum("eq,eqi,eqj->eij", w, val, val)
        dm = space.dofmap[el]
        rows.append(np.repeat(dm, dm.shape[1], axis=1).ravel())
        cols.append(np.tile(dm, (1, dm.shape[1])).ravel())
        kv.append(Ke.ravel())
        mv.append(Me.ravel())
    r, c = np.concatenate(rows), np.concatenate(cols)
    n = space.ndof
    K = sp.csr_matrix((np.concatenate(kv), (r, c)), shape=(n, n))
    M = sp.csr_matrix((np.concatenate(mv), (r, c)), shape=(n, n))
    return K, M


def volume_load(space, density, degree=None):
    """F_a = (f, phi_a) for a callable f(x) -> (npts, 3)."""
    xq, wq = tet_rule(degree or volume_degree(space.p) + 2)
    F = np.zeros(space.ndof, complex)
    for el in chunks(space.mesh.n_elements, CHUNK):
        x, adet, val, _ = pulled_back(space, xq, el)
        f = np.asarray(density(x.reshape(-1, 3))).reshape(x.shape)
        loc = np.einsum("eq,eqc,eqic->ei", adet * wq, f, val)
        np.add.at(F, space.dofmap[el], loc)
    return F


# ---------------------------------------------------------------- boundary

def real_vsh(L, points):
    """Real orthonormal tangential harmonics at sphere points: (T_R, G_R) of shape
    (npts, nmodes, 3); slot (l, m>0) holds sqrt(2) Re B_l^m / sqrt(lam), slot
    (l, -m) sqrt(2) Im B_l^m / sqrt(lam), slot (l, 0) B_l^0 / sqrt(lam)."""
    _, G, T = vsh_all(L, points)
    ell, m = mode_arrays(L)
    src = np.array([mode_index(l, abs(mm)) for l, mm in zip(ell, m)])
    lam = ell * (ell + 1.0)
    lam[0] = 1
    fac = np.where(m == 0, 1.0, np.sqrt(2.0)) / np.sqrt(lam)
    out = []
    for B in (T, G):
        Bs = B[:, src]
        R = np.where((m < 0)[None, :, None], Bs.imag, Bs.real) * fac[None, :, None]
        R[:, 0] = 0
        out.append(R)
    return out[0], out[1]


def real_to_spectrum(L, a_curl, a_grad):
    """Complex TangentialSpectrum of sum a_j R_j (both real-basis parts)."""
    ell, m = mode_arrays(L)
    lam = ell * (ell + 1.0)
    lam[0] = 1
    out = []
    for a in (a_curl, a_grad):
        c = np.zeros(nmodes(L), complex)
        for l in range(1, L + 1):
            s = np.sqrt(lam[mode_index(l, 0)])
            c[mode_index(l, 0)] = a[mode_index(l, 0)] / s
            for mm in range(1, l + 1):
                ap, am = a[mode_index(l, mm)], a[mode_index(l, -mm)]
                c[mode_index(l, mm)] = (ap - 1j * am) / np.sqrt(2 * lam[mode_index(l, mm)])
                c[mode_index(l, -mm)] = (-1) ** mm * (ap + 1j * am) / np.sqrt(2 * lam[mode_index(l, mm)])
        out.append(c)
    return TangentialSpectrum(L, out[0], out[1])


def boundary_face_quadrature(mesh, degree, with_normal=False):
    """Yields (elements, x (nf,nq,3), dA*w (nf,nq), reference points, geometry),
    plus the unit outward normal (nf,nq,3) when with_normal is set."""
    st, w = tri_rule(degree)
    bset = set(mesh.boundary_faces.tolist())
    owner = {}
    for e in range(mesh.n_elements):
        for lf in range(4):
            f = mesh.tet_faces[e, lf]
            if f in bset:
                owner[f] = (e, lf)
    faces = np.array(sorted(owner))
    own = np.array([owner[f] for f in faces]).reshape(-1, 2)
    for lf in range(4):
        a, b, c = FACES[lf]
        t1, t2 = REF_VERTICES[b] - REF_VERTICES[a], REF_VERTICES[c] - REF_VERTICES[a]
        xhat = REF_VERTICES[a] + st[:, :1] * t1 + st[:, 1:] * t2
        els = own[own[:, 1] == lf, 0]
        for el in chunks(len(els), 256):
            x, J = mesh.geometry(xhat, els[el])
            cr = np.cross(J @ t1, J @ t2)
            dA = np.linalg.norm(cr, axis=-1)
            if not with_normal:
                yield els[el], x, dA * w[None, :], xhat, (x, J)
                continue
            n = cr / dA[..., None]
            n *= np.sign(np.sum(n * x, -1))[..., None]      # star-shaped ball: n . x > 0
            yield els[el], x, dA * w[None, :], xhat, (x, J), n


@dataclass
class BoundaryCoupling:
    L_max: int
    bdofs: np.ndarray           # global dof ids with nonzero trace
    U_curl: np.ndarray          # (nmodes, len(bdofs)) real
    U_grad: np.ndarray

    def real_coefficients(self, coeffs):
        c = np.asarray(coeffs)[self.bdofs]
        return self.U_curl @ c, self.U_grad @ c

    def spectrum(self, coeffs):
        """TangentialSpectrum of the trace Pi_T v_h (analysis by projection)."""
        return real_to_spectrum(self.L_max, *self.real_coefficients(coeffs))

    def dtn_block(self, k):
        """Dense -ik U^T diag(s) U on the boundary dofs."""
        sc, sg = self.symbols(k)
        return -1j * k * ((self.U_curl.T * sc) @ self.U_curl + (self.U_grad.T * sg) @ self.U_grad)

    def symbols(self, k):
        sc, sg = _symbols_by_ell(self.L_max, float(k))
        ell = mode_arrays(self.L_max)[0]
        return sc[ell], sg[ell]


def boundary_sh_coupling(space, L_max, degree=None):
    mesh = space.mesh
    need = face_degree(space.p, L_max, mesh.refinement)
    degree = need if degree is None else degree
    if degree < need:
        raise ValueError("surface quadrature degree %d below the required %d" % (degree, need))
    bdofs = space.boundary_dofs()
    pos = -np.ones(space.ndof, int)
    pos[bdofs] = np.arange(len(bdofs))
    nm = nmodes(L_max)
    Uc = np.zeros((nm, len(bdofs)))
    Ug = np.zeros((nm, len(bdofs)))
    for els, x, wdA, xhat, geo, n in boundary_face_quadrature(mesh, degree, True):
        _, _, val, _ = pulled_back(space, xhat, els, geometry=geo)
        TR, GR = real_vsh(L_max, x.reshape(-1, 3))
        # projected on the face tangent plane (a no-op on the exact sphere)
        TR, GR = (R.reshape(x.shape[0], x.shape[1], nm, 3) for R in (TR, GR))
        TR, GR = (R - np.einsum("eqjc,eqc->eqj", R, n)[..., None] * n[:, :, None] for R in (TR, GR))
        cols = pos[space.dofmap[els]]
        for U, R in ((Uc, TR), (Ug, GR)):
            loc = np.einsum("eq,eqjc,eqic->eji", wdA, R, val)
            keep = cols >= 0
            np.add.at(U.T, cols[keep], np.transpose(loc, (0, 2, 1))[keep])
    return BoundaryCoupling(L_max, bdofs, Uc, Ug)


def boundary_load(space, density, degree=None):
    """F_a = (g, phi_a)_Gamma_h for a tangential density g(x) -> (npts, 3)."""
    degree = degree or face_degree(space.p, 0, space.mesh.refinement) + 4
    F = np.zeros(space.ndof, complex)
    for els, x, wdA, xhat, geo, n in boundary_face_quadrature(space.mesh, degree, True):
        _, _, val, _ = pulled_back(space, xhat, els, geometry=geo)
        g = np.asarray(density(x.reshape(-1, 3))).reshape(x.shape)
        g = g - np.sum(g * n, -1)[..., None] * n       # tangential to Gamma_h
        np.add.at(F, space.dofmap[els], np.einsum("eq,eqc,eqic->ei", wdA, g, val))
    return F


# ---------------------------------------------------------------- system

@dataclass
class Load:
    volume: object = None     # callable x -> (n, 3): density f in F(v) = (f, v)
    boundary: object = None   # callable x -> (n, 3): tangential g in F(v) = (g, v_T)_Gamma


@dataclass
class FeSystem:
    space: FeSpace
    k: float
    L_max: int
    K: sp.csr_matrix
    M: sp.csr_matrix
    coupling: BoundaryCoupling
    load: np.ndarray
    _dtn: np.ndarray = field(default=None, repr=False)

    @property
    def ndof(self):
        return self.space.ndof

    def dtn(self):
        if self._dtn is None:
            self._dtn = self.coupling.dtn_block(self.k)
        return self._dtn

    def volume_matrix(self):
        return (self.K - self.k ** 2 * self.M).tocsr()

    def matvec(self, x):
        y = self.K @ x - self.k ** 2 * (self.M @ x)
        b = self.coupling.bdofs
        y = y.astype(complex)
        y[b] += self.dtn() @ x[b]
        return y

    def dense(self):
        A = self.volume_matrix().toarray().astype(complex)
        b = self.coupling.bdofs
        A[np.ix_(b, b)] += self.dtn()
        return A

    def form(self, x, y):
        """A_k(x, y) with y conjugated (sesquilinear)."""
        return complex(np.vdot(y, self.matvec(x)))

    def scale(self):
        return float(abs(self.K).max() + self.k ** 2 * abs(self.M).max())


def assemble_system(mesh, p, k, L_max, rhs=None, lam=2.0, surface_degree=None):
    h = mesh.h()
    if k * h / max(p, 1) > 10:
        raise ValueError("kh/p = %.3g exceeds the hard cap 10" % (k * h / max(p, 1)))
    if L_max < lam * k:
        raise ValueError("L_max must be >= lambda k")
    space = FeSpace(mesh, "N", p)
    K, M = assemble_volume(space)
    cpl = boundary_sh_coupling(space, L_max, surface_degree)
    F = np.zeros(space.ndof, complex)
    rhs = rhs or Load()
    if rhs.volume is not None:
        F += volume_load(space, rhs.volume)
    if rhs.boundary is not None:
        F += boundary_load(space, rhs.boundary)
    return FeSystem(space, float(k), int(L_max), K, M, cpl, F)


def export_matrix_market(A, path, comment="maxwell_dtn system"):
    scipy.io.mmwrite(path, sp.coo_matrix(A), comment=comment)
