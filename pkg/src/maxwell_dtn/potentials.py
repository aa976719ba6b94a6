"""Fundamental solution, layer and Newton potentials, manufactured fields.

Mode-diagonal formulas rest on the addition theorem
    g_k(|x - y|) = ik sum_l j_l(k r_<) h_l(k r_>) sum_m Y_l^m(x^) conj(Y_l^m(y^)),
and direct quadratures of the kernel serve as independent checks.
"""

from dataclasses import dataclass

import numpy as np

from .dtn import _symbols_by_ell
from .freqsplit import VolumeVshField, radial_basis, radial_rule
from .harmonics import (TangentialSpectrum, mode_arrays, mode_index,
                        sph_harmonics_all, sphere_quadrature, vsh_all)
from .specfun import spherical_jn_all, spherical_yn_all


def greens_helmholtz(k, x, y):
    """e^{ik|x-y|} / (4 pi |x-y|); k < 0 gives g_{-|k|} = conj(g_{|k|})."""
    d = np.linalg.norm(np.asarray(x, float) - np.asarray(y, float), axis=-1)
    if np.any(d == 0):
        raise ValueError("kernel is singular at x = y")
    return np.exp(1j * k * d) / (4 * np.pi * d)


def _jj(L, r):
    """(j_l, d/dr j_l) for l = 0..L at r >= 0; arrays (L+1, len(r))."""
    r = np.maximum(np.atleast_1d(np.asarray(r, float)), 1e-12)
    j = spherical_jn_all(L + 1, r)
    dj = np.empty((L + 1, r.size))
    dj[0] = -j[1]
    for l in range(1, L + 1):
        dj[l] = j[l - 1] - (l + 1) / r * j[l]
    return j[:L + 1], dj


def _hh(L, r):
    """(h_l, d/dr h_l) for l = 0..L at r > 0."""
    r = np.atleast_1d(np.asarray(r, float))
    h = spherical_jn_all(L + 1, r) + 1j * spherical_yn_all(L + 1, r)
    dh = np.empty((L + 1, r.size), complex)
    dh[0] = -h[1]
    for l in range(1, L + 1):
        dh[l] = h[l - 1] - (l + 1) / r * h[l]
    return h[:L + 1], dh


# ---------------------------------------------------------------- single layers

def single_layer_helmholtz(k, density, x):
    """S_k[phi](x) = int_Gamma g_k(|x-y|) phi(y) dS_y for a ScalarSpectrum phi, |x| < 1."""
    x = np.atleast_2d(np.asarray(x, float))
    r = np.linalg.norm(x, axis=1)
    if np.any(r >= 1):
        raise ValueError("interior points only")
    L = density.L_max
    Y = sph_harmonics_all(L, np.where(r[:, None] > 0, x, [[0, 0, 1.0]]))
    jr = _jj(L, k * r)[0]
    hk = _hh(L, np.array([k]))[0]
    ell = mode_arrays(L)[0]
    coef = 1j * k * hk[ell, 0] * density.c
    return np.einsum("lq,ql->q", jr[ell], Y * coef[None, :]) if x.size else np.zeros(0, complex)


def single_layer_quadrature(k, samples_fn, x, L_quad=200):
    """Direct product-Gauss quadrature of the kernel against samples_fn(points)
    (scalar or vector valued) on the unit sphere."""
    q = sphere_quadrature(L_quad)
    vals = np.asarray(samples_fn(q.points))
    x = np.atleast_2d(np.asarray(x, float))
    out = []
    for xi in x:
        g = greens_helmholtz(k, xi[None, :], q.points) * q.weights
        out.append(np.tensordot(g, vals, axes=(0, 0)))
    return np.array(out)


def _vsh_single_layer(k, L, v, V, x):
    """Componentwise S_k of sum v T + V G at interior points (npts, 3)."""
    r = np.linalg.norm(x, axis=1)
    xh = x / r[:, None]
    Yx, Gx, Tx = vsh_all(L + 1, xh)
    ell, m = mode_arrays(L)
    jr = _jj(L + 1, k * r)[0]
    hk = _hh(L + 1, np.array([k]))[0][:, 0]
    out = np.zeros((len(x), 3), complex)
    for i in range(1, len(ell)):
        l = ell[i]
        if v[i]:
            out += v[i] * 1j * k * (jr[l] * hk[l])[:, None] * Tx[:, i]
        if V[i]:
            P = Yx[:, i, None] * xh
            A = l * P + Gx[:, i]
            C = -(l + 1) * P + Gx[:, i]
            sa = 1j * k * jr[l - 1] * hk[l - 1]
            sc = 1j * k * jr[l + 1] * hk[l + 1]
            out += V[i] * ((l + 1) * sa[:, None] * A + l * sc[:, None] * C) / (2 * l + 1)
    return out


def maxwell_single_layer(k, density, x):
    """S_k[phi] + k^-2 grad S_k[div_G phi] for a TangentialSpectrum phi, |x| < 1."""
    x = np.atleast_2d(np.asarray(x, float))
    r = np.linalg.norm(x, axis=1)
    if np.any(r >= 1) or np.any(r == 0):
        raise ValueError("interior points away from the origin only")
    L = density.L_max
    out = _vsh_single_layer(k, L, density.v, density.V, x)
    # div_G(V G) = -lam V Y, S_k[Y] = ik j_l(kr) h_l(k) Y; grad(f Y) = f' Y x^ + f/r G
    ell = mode_arrays(L)[0]
    lam = ell * (ell + 1.0)
    j, dj = _jj(L, k * r)
    hk = _hh(L, np.array([k]))[0]
    Y, G, _ = vsh_all(L, x)
    c = -lam * density.V * 1j * k * hk[ell, 0]
    f = j[ell].T * c
    df = k * dj[ell].T * c
    xh = x / r[:, None]
    grad = np.sum(df * Y, axis=1)[:, None] * xh + np.einsum("qj,qja->qa", f / r[:, None], G)
    return out + grad / k ** 2


# ---------------------------------------------------------------- sources

@dataclass
class SourceSpec:
    """Divergence-free interior current.

    kind "vsh": amplitude * f(r) T_l^m(x^) with the C^7 bump
    f = (1 - s^2)^8, s = (2r - a - b)/(b - a), on (a, b);
    kind "callable": func(x) -> (n, 3), cut off outside a <= |x| <= b."""
    kind: str = "vsh"
    ell: int = 1
    m: int = 0
    a: float = 0.2
    b: float = 0.7
    amplitude: complex = 1.0
    func: object = None

    def __post_init__(self):
        if not 0 <= self.a < self.b < 1:
            raise ValueError("support must satisfy 0 <= a < b < 1")
        if self.kind == "vsh" and (self.ell < 1 or abs(self.m) > self.ell):
            raise ValueError("need l >= 1 and |m| <= l")
        if self.kind not in ("vsh", "callable"):
            raise ValueError("kind must be 'vsh' or 'callable'")

    def profile(self, r):
        r = np.asarray(r, float)
        s = (2 * r - self.a - self.b) / (self.b - self.a)
        inside = abs(s) < 1
        q = np.where(inside, 1 - s * s, 1.0)
        return np.where(inside, q ** 8, 0.0)

    def __call__(self, x):
        x = np.atleast_2d(np.asarray(x, float))
        if self.kind == "callable":
            r = np.linalg.norm(x, axis=1)
            inside = (r <= self.b) & (r >= self.a)
            return np.asarray(self.func(x)) * inside[:, None]
        r = np.linalg.norm(x, axis=1)
        out = np.zeros((len(x), 3), complex)
        sel = (r > self.a) & (r < self.b)
        if np.any(sel):
            _, _, T = vsh_all(self.ell, x[sel])
            out[sel] = self.amplitude * self.profile(r[sel])[:, None] * T[:, mode_index(self.ell, self.m)]
        return out

    def l2_norm(self):
        rq, wq = radial_rule(120)
        rr = self.a + (self.b - self.a) * rq
        lam = self.ell * (self.ell + 1.0)
        return float(abs(self.amplitude) * np.sqrt(lam * np.sum(wq * (self.b - self.a) * rr ** 2 * self.profile(rr) ** 2)))


def _unit_ball_chord(x, w):
    """[lo, hi] of rho >= 0 with |x + rho w| <= 1 (empty: lo = hi)."""
    bw = w @ x
    disc = bw * bw - (x @ x - 1.0)
    root = np.sqrt(np.maximum(disc, 0))
    hi = np.where(disc > 0, np.maximum(-bw + root, 0), 0)
    lo = np.minimum(np.maximum(-bw - root, 0), hi)
    return lo, hi


NEWTON_ORDERS = (16, 24, 32, 48, 64, 96, 128)


def newton_potential(k, source, x, tol=1e-8, orders=NEWTON_ORDERS, return_info=False):
    """N_k[w](x) = int g_k(|x-y|) w(y) dy by Gauss quadrature in spherical
    coordinates centred at x: the Jacobian rho^2 cancels the kernel singularity
    and the support lies in the unit ball, so every ray is integrated over its
    chord.  Orders grow until the relative change is <= tol; points where this
    fails are reported (return_info) or raise FloatingPointError."""
    x = np.atleast_2d(np.asarray(x, float))
    out, ok = np.zeros((len(x), 3), complex), np.zeros(len(x), bool)
    for i, xi in enumerate(x):
        prev = None
        for n in orders:
            val = _newton_at(k, source, xi, n)
            if prev is not None:
                scale = max(np.max(abs(val)), 1e-300)
                if np.max(abs(val - prev)) <= tol * scale or np.max(abs(val)) == 0:
                    ok[i] = True
                    break
            prev = val
        out[i] = val
    if return_info:
        return out, ok
    if not np.all(ok):
        raise FloatingPointError("Newton potential quadrature did not converge at %d points" % (~ok).sum())
    return out


def _newton_at(k, source, xi, n, chunk=4000):
    q = sphere_quadrature(n)
    t, tw = np.polynomial.legendre.leggauss(n)
    t, tw = 0.5 * (t + 1), 0.5 * tw
    total = np.zeros(3, complex)
    for s in range(0, len(q.weights), chunk):
        w, wt = q.points[s:s + chunk], q.weights[s:s + chunk]
        lo, hi = _unit_ball_chord(xi, w)
        ln = hi - lo
        rho = lo[:, None] + ln[:, None] * t[None, :]
        y = xi + rho[:, :, None] * w[:, None, :]
        f = source(y.reshape(-1, 3)).reshape(len(w), n, 3)
        ker = np.exp(1j * k * rho) * rho * (wt * ln)[:, None] * tw[None, :]
        total += np.einsum("st,stc->c", ker, f)
    return total / (4 * np.pi)


# ---------------------------------------------------------------- exact fields

class ExactField:
    """Callable x -> (E, curl E), both (npts, 3) complex."""

    def __call__(self, x):
        raise NotImplementedError

    def curl_curl_residual(self, x, k, h=1e-4, rhs=None):
        """|curl curl E - k^2 E - rhs| by central differences of the analytic curl."""
        x = np.atleast_2d(np.asarray(x, float))
        E, C = self(x)
        J = np.zeros((len(x), 3, 3), complex)
        for d, e in enumerate(np.eye(3)):
            J[:, :, d] = (self(x + h * e)[1] - self(x - h * e)[1]) / (2 * h)
        cc = np.stack([J[:, 2, 1] - J[:, 1, 2], J[:, 0, 2] - J[:, 2, 0], J[:, 1, 0] - J[:, 0, 1]], 1)
        res = cc - k * k * E - (0 if rhs is None else rhs(x))
        return np.linalg.norm(res, axis=1)


class InteriorMode(ExactField):
    """TE: E = j_l(kr) T_l^m.   TM: E = curl(j_l(kr) T_l^m) / k."""

    def __init__(self, ell, m, k, polarization):
        if ell < 1 or abs(m) > ell:
            raise ValueError("need l >= 1 and |m| <= l")
        if polarization not in ("TE", "TM"):
            raise ValueError("polarization must be 'TE' or 'TM'")
        self.ell, self.m, self.k, self.pol = ell, m, float(k), polarization
        self.index = mode_index(ell, m)

    def radial(self, r):
        """(u, v, w) and their r-derivatives of the VSH expansion."""
        l, k = self.ell, self.k
        lam = l * (l + 1.0)
        r = np.maximum(np.asarray(r, float), 1e-12)
        j, dj = _jj(l, k * r)
        j, dj = j[l], k * dj[l]                    # d/dr j(kr)
        if self.pol == "TE":
            z = np.zeros_like(r)
            return z, z, j, z, z, dj
        # (r j)'' = (lam/r^2 - k^2) r j
        rj, drj = r * j, j + r * dj
        d2rj = (lam / r ** 2 - k * k) * rj
        u = lam * j / (k * r)
        du = lam * (dj * r - j) / (k * r * r)
        v = drj / (k * r)
        dv = (d2rj * r - drj) / (k * r * r)
        z = np.zeros_like(r)
        return u, v, z, du, dv, z

    def __call__(self, x):
        x = np.atleast_2d(np.asarray(x, float))
        r = np.linalg.norm(x, axis=1)
        xh = x / np.maximum(r, 1e-300)[:, None]
        Y, G, T = vsh_all(self.ell, np.where(r[:, None] > 0, x, [[0, 0, 1.0]]))
        i = self.index
        Y, G, T = Y[:, i], G[:, i], T[:, i]
        u, v, w, du, dv, dw = self.radial(r)
        lam = self.ell * (self.ell + 1.0)
        E = u[:, None] * Y[:, None] * xh + v[:, None] * G + w[:, None] * T
        rs = np.maximum(r, 1e-12)
        C = (((u - v - rs * dv) / rs)[:, None] * T + ((w + rs * dw) / rs)[:, None] * G
             + (lam * w / rs)[:, None] * Y[:, None] * xh)
        return E, C

    def vsh_field(self, L_max=None, N_r=32):
        """The same field as a VolumeVshField (radial parts projected on the
        orthonormal Jacobi basis; spectrally accurate)."""
        L = L_max or self.ell
        f = VolumeVshField.zeros(L, N_r)
        r, w = radial_rule(N_r + 40)
        prof = self.radial(r)[:3]
        from .freqsplit import exponents
        for c, s in enumerate(exponents(self.ell)):
            B, _ = radial_basis(N_r, s, r)
            f.coef[c, self.index] = B.T @ (w * r * r * prof[c])
        return f

    def boundary_spectrum(self, L_max, lam_split=None):
        """Spectrum of g = gamma_T curl E - ik T_k Pi_T E on the sphere."""
        l, k = self.ell, self.k
        h, dh = _hh(l, np.array([k]))
        h, dh = h[l, 0], dh[l, 0]
        g = TangentialSpectrum.zeros(L_max)
        if self.pol == "TE":
            g.v[self.index] = -1j / (k * h)
        else:
            g.V[self.index] = -1j / (h + k * dh)
        return g

    def boundary_density(self, L_max=None):
        g = self.boundary_spectrum(L_max or self.ell)

        def dens(x):
            _, G, T = vsh_all(g.L_max, x)
            return np.einsum("qja,j->qa", T, g.v) + np.einsum("qja,j->qa", G, g.V)
        return dens


def boundary_residual_spectrum(field, k):
    """gamma_T curl E - ik T_k Pi_T E from the radial data of a VolumeVshField."""
    d = field.radial(np.array([1.0]))
    u, v, w = d["u"][:, 0], d["v"][:, 0], d["w"][:, 0]
    rv_p = v + d["dv"][:, 0]
    rw_p = w + d["dw"][:, 0]
    sc, sg = _symbols_by_ell(field.L_max, float(k))
    ell = mode_arrays(field.L_max)[0]
    gc = rw_p - 1j * k * sc[ell] * w
    gg = rv_p - u - 1j * k * sg[ell] * v
    gc[0] = gg[0] = 0
    return TangentialSpectrum(field.L_max, gc, gg)


def field_inner_curl(a, b):
    r, wq = a.nodes()
    da, db = a.radial(r), b.radial(r)
    ell = mode_arrays(a.L_max)[0]
    lam = (ell * (ell + 1.0))[:, None]
    ca = (da["u"] - da["v"] - r * da["dv"], da["w"] + r * da["dw"], da["w"])
    cb = (db["u"] - db["v"] - r * db["dv"], db["w"] + r * db["dw"], db["w"])
    f = lam * ca[0] * np.conj(cb[0]) + lam * ca[1] * np.conj(cb[1]) + lam ** 2 * ca[2] * np.conj(cb[2])
    return complex(np.sum(f @ wq))


def spectral_form(E, v, k):
    """A_k(E, v) for VolumeVshFields via radial quadrature and the symbols."""
    from .freqsplit import field_inner_l2
    from .dtn import apply_capacity
    tE, tv = E.tangential_trace(), v.tangential_trace()
    return (field_inner_curl(E, v) - k * k * field_inner_l2(E, v)
            - 1j * k * apply_capacity(tE, k).l2_inner(tv))


@dataclass
class ManufacturedMode:
    exact: InteriorMode
    field: VolumeVshField
    boundary: TangentialSpectrum

    def functional(self, v):
        """G(v) = (g, v_T)_Gamma for a VolumeVshField v."""
        return self.boundary.truncated(v.L_max).l2_inner(v.tangential_trace()) if v.L_max < self.boundary.L_max \
            else self.boundary.l2_inner(v.tangential_trace().truncated(self.boundary.L_max))


def manufactured_interior_mode(ell, m, k, polarization="TE", L_max=None, N_r=32):
    ex = InteriorMode(ell, m, k, polarization)
    L = L_max or ell
    return ManufacturedMode(ex, ex.vsh_field(L, N_r), ex.boundary_spectrum(L))


class VolumeSourceField(ExactField):
    """E = ik N_k[j] for a SourceSpec; the "vsh" kind is evaluated through
    E = ik e(r) T with
        e(r) = amp * ik [h(kr) int_0^r j(k s) f s^2 ds + j(kr) int_r^1 h(k s) f s^2 ds],
    the "callable" kind through newton_potential (slow, curl by differences)."""

    def __init__(self, k, source, nquad=80):
        self.k, self.src = float(k), source
        if source.kind == "vsh":
            # the integrands are smooth on [a, b]; Chebyshev antiderivatives of
            # degree nquad are exact to rounding
            a, b = source.a, source.b
            C = np.polynomial.chebyshev
            t = np.cos(np.pi * (np.arange(nquad + 1) + 0.5) / (nquad + 1))
            s = a + 0.5 * (b - a) * (t + 1)
            g = source.profile(s) * s * s
            ca = C.chebfit(t, g * self._j(s), nquad)
            cb = C.chebfit(t, g * self._h(s), nquad)
            self._cA = C.chebint(ca, lbnd=-1) * 0.5 * (b - a)
            self._cB = C.chebint(cb, lbnd=1) * (-0.5) * (b - a)
            self.A_tot = self._A(np.array([b]))[0]
            self.B_tot = self._B(np.array([a]))[0]

    def _t_of(self, r):
        a, b = self.src.a, self.src.b
        return 2 * (np.clip(r, a, b) - a) / (b - a) - 1

    def _j(self, s):
        return _jj(self.src.ell, self.k * s)[0][self.src.ell]

    def _h(self, s):
        return _hh(self.src.ell, self.k * s)[0][self.src.ell]

    def _A(self, r):
        """int_a^r j(ks) f(s) s^2 ds."""
        return np.polynomial.chebyshev.chebval(self._t_of(r), self._cA)

    def _B(self, r):
        """int_r^b h(ks) f(s) s^2 ds."""
        return np.polynomial.chebyshev.chebval(self._t_of(r), self._cB)

    def profile(self, r):
        """(e, e') with E = ik e(r) T."""
        r = np.maximum(np.asarray(r, float), 1e-12)
        k = self.k
        A = np.where(r >= self.src.b, self.A_tot, 0).astype(complex)
        B = np.where(r <= self.src.a, self.B_tot, 0).astype(complex)
        mid = (r > self.src.a) & (r < self.src.b)
        if np.any(mid):
            A[mid] = self._A(r[mid])
            B[mid] = self._B(r[mid])
        l = self.src.ell
        j, dj = _jj(l, k * r)
        # h(kr) only multiplies A, which vanishes for r <= a
        rs = np.where(r > self.src.a, r, 1.0)
        hh, dhh = _hh(l, k * rs)
        amp = self.src.amplitude * 1j * k
        e = amp * (hh[l] * A + j[l] * B)
        de = amp * k * (dhh[l] * A + dj[l] * B)
        return e, de

    def __call__(self, x):
        x = np.atleast_2d(np.asarray(x, float))
        if self.src.kind == "callable":
            E = 1j * self.k * newton_potential(self.k, self.src, x)
            return E, self._fd_curl(x)
        r = np.linalg.norm(x, axis=1)
        rs = np.maximum(r, 1e-12)
        xh = x / rs[:, None]
        Y, G, T = vsh_all(self.src.ell, np.where(r[:, None] > 0, x, [[0, 0, 1.0]]))
        i = mode_index(self.src.ell, self.src.m)
        e, de = self.profile(rs)
        lam = self.src.ell * (self.src.ell + 1.0)
        ik = 1j * self.k
        E = ik * e[:, None] * T[:, i]
        C = ik * (((e + rs * de) / rs)[:, None] * G[:, i] + (lam * e / rs)[:, None] * Y[:, i, None] * xh)
        return E, C

    def _fd_curl(self, x, h=1e-3):
        J = np.zeros((len(x), 3, 3), complex)
        for d, e in enumerate(np.eye(3)):
            J[:, :, d] = (1j * self.k * (newton_potential(self.k, self.src, x + h * e)
                                         - newton_potential(self.k, self.src, x - h * e))) / (2 * h)
        return np.stack([J[:, 2, 1] - J[:, 1, 2], J[:, 0, 2] - J[:, 2, 0], J[:, 1, 0] - J[:, 0, 1]], 1)

    def load_density(self):
        """f with F(v) = (f, v) = (ik j, v)."""
        return lambda x: 1j * self.k * self.src(x)


def manufactured_volume_source(k, source):
    return VolumeSourceField(k, source)
