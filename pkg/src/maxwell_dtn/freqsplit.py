"""Frequency filters, volume VSH fields and spectral Helmholtz projections on
the unit ball.

A volume field is expanded as

    u = sum_{l,m} u_lm(r) Y x_hat + v_lm(r) grad_G Y + w_lm(r) T,

with T = grad_G Y x x_hat. Each radial function is r^s times a Jacobi
series in (2r - 1), orthonormal in L^2(r^2 dr); s = l-1 for u, v and s = l for w (s = 0 for the l = 0
u-component), which builds the behavior at the origin into the ansatz.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .dtn import DEFAULT_LAMBDA, _symbols_by_ell, symbols
from .harmonics import (ScalarSpectrum, TangentialSpectrum, mode_arrays, nmodes,
                        scalar_hs_norm, vsh_all)

COMPONENTS = ("Y", "U", "V")


@dataclass(frozen=True)
class RadialSolveConfig:
    N_r: int = 32
    extra_nodes: int = 8

    def __post_init__(self):
        if self.N_r < 8:
            raise ValueError("N_r >= 8 required")


def exponents(ell):
    """Powers of r multiplying the (u, v, w) Legendre series of mode l."""
    if ell == 0:
        return 0, 0, 0
    return ell - 1, ell - 1, ell


def jacobi_all(N, a, b, x):
    """P_0..P_N^{(a,b)}(x) by the three-term recurrence; array (len(x), N+1)."""
    x = np.asarray(x, float)
    P = np.zeros((x.size, N + 1))
    P[:, 0] = 1
    if N >= 1:
        P[:, 1] = (a + 1) + (a + b + 2) * (x - 1) / 2
    for n in range(2, N + 1):
        c = 2 * n + a + b
        P[:, n] = ((c - 1) * (c * (c - 2) * x + a * a - b * b) * P[:, n - 1]
                   - 2 * (n + a - 1) * (n + b - 1) * c * P[:, n - 2]) / (2 * n * (n + a + b) * (c - 2))
    return P


def radial_basis(N, s, r):
    """b_n(r) = sqrt(2n+2s+3) r^s P_n^{(0,2s+2)}(2r-1), n = 0..N, orthonormal in
    L^2(r^2 dr); returns values and r-derivatives, arrays (len(r), N+1)."""
    r = np.atleast_1d(np.asarray(r, float))
    beta = 2 * s + 2
    x = 2 * r - 1
    n = np.arange(N + 1)
    scale = np.sqrt(2 * n + beta + 1.0)
    P = jacobi_all(N, 0, beta, x) * scale
    dP = np.zeros_like(P)
    if N >= 1:
        # d/dr P_n^{(0,b)}(2r-1) = (n+b+1) P_{n-1}^{(1,b+1)}(2r-1)
        dP[:, 1:] = jacobi_all(N - 1, 1, beta + 1, x) * (n[1:] + beta + 1.0) * scale[1:]
    rs = r ** s
    drs = s * r ** (s - 1) if s > 0 else np.zeros_like(r)
    return rs[:, None] * P, drs[:, None] * P + rs[:, None] * dP


def polynomial_at_origin(N, s):
    """b_n(r)/r^s at r = 0."""
    return jacobi_all(N, 0, 2 * s + 2, np.array([-1.0]))[0] * np.sqrt(2 * np.arange(N + 1) + 2 * s + 3.0)


def radial_rule(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1), 0.5 * w


@dataclass
class VolumeVshField:
    L_max: int
    N_r: int
    coef: np.ndarray  # (3, nmodes, N_r+1): components u (Y), v (U = grad_G Y), w (V = T)

    def __post_init__(self):
        self.coef = np.asarray(self.coef, dtype=complex)
        if self.coef.shape != (3, nmodes(self.L_max), self.N_r + 1):
            raise ValueError("coefficient array has wrong shape")

    @classmethod
    def zeros(cls, L, N_r=32):
        return cls(L, N_r, np.zeros((3, nmodes(L), N_r + 1), complex))

    @classmethod
    def random(cls, L, N_r, rng, decay=1.0, degree=None):
        """Random field; coefficients decay like (1+l)^-decay (1+n)^-decay."""
        ell, _ = mode_arrays(L)
        d = N_r if degree is None else degree
        c = (rng.standard_normal((3, nmodes(L), N_r + 1))
             + 1j * rng.standard_normal((3, nmodes(L), N_r + 1)))
        c *= ((1.0 + ell)[None, :, None] * (1.0 + np.arange(N_r + 1))[None, None, :]) ** (-decay)
        c[1:, 0, :] = 0
        c[:, :, d + 1:] = 0
        # regularity at the origin: u(r)/r^{l-1} -> l v(r)/r^{l-1}
        for l in range(L + 1):
            su, sv, _ = exponents(l)
            pu, pv = polynomial_at_origin(N_r, su), polynomial_at_origin(N_r, sv)
            pu[d + 1:] = 0
            sel = ell == l
            delta = l * (c[1, sel] @ pv) - c[0, sel] @ pu
            c[0, sel] += delta[:, None] * pu[None, :] / (pu @ pu)
        return cls(L, N_r, c)

    def copy(self):
        return VolumeVshField(self.L_max, self.N_r, self.coef.copy())

    def __add__(self, other):
        return VolumeVshField(self.L_max, self.N_r, self.coef + other.coef)

    def __sub__(self, other):
        return VolumeVshField(self.L_max, self.N_r, self.coef - other.coef)

    def scaled(self, a):
        return VolumeVshField(self.L_max, self.N_r, a * self.coef)

    def nodes(self, extra=8):
        return radial_rule(self.N_r + self.L_max + extra)

    # ------------------------------------------------------------ radial data
    def radial(self, r, ell_modes=None):
        """Radial functions and derivatives at r: dict name -> (nmodes, len(r))."""
        ell, _ = mode_arrays(self.L_max)
        r = np.asarray(r, float)
        out = {k: np.zeros((nmodes(self.L_max), r.size), complex) for k in ("u", "v", "w", "du", "dv", "dw")}
        for l in range(self.L_max + 1):
            idx = np.nonzero(ell == l)[0]
            for comp, s in zip("uvw", exponents(l)):
                B, dB = radial_basis(self.N_r, s, r)
                c = self.coef["uvw".index(comp), idx]
                out[comp][idx] = c @ B.T
                out["d" + comp][idx] = c @ dB.T
        return out

    def boundary_values(self):
        d = self.radial(np.array([1.0]))
        return d["u"][:, 0], d["v"][:, 0], d["w"][:, 0]

    # ------------------------------------------------------------ norms
    def _mode_integrals(self):
        r, wq = self.nodes()
        d = self.radial(r)
        ell = mode_arrays(self.L_max)[0]
        lam = (ell * (ell + 1.0))[:, None]
        u, v, w = d["u"], d["v"], d["w"]
        rv_p = v + r * d["dv"]
        rw_p = w + r * d["dw"]
        l2 = (r * r * (abs(u) ** 2 + lam * (abs(v) ** 2 + abs(w) ** 2))) @ wq
        cu = (lam * abs(u - rv_p) ** 2 + lam * abs(rw_p) ** 2 + lam ** 2 * abs(w) ** 2) @ wq
        return l2, cu

    def l2_norm(self):
        return float(np.sqrt(self._mode_integrals()[0].sum()))

    def curl_l2_norm(self):
        return float(np.sqrt(self._mode_integrals()[1].sum()))

    def div_l2_norm(self):
        r, wq = self.nodes()
        d = self.radial(r)
        ell = mode_arrays(self.L_max)[0]
        lam = (ell * (ell + 1.0))[:, None]
        # div u = [(r^2 u)'/r^2 - lam v / r] Y
        div = (2 * r * d["u"] + r * r * d["du"] - lam * r * d["v"]) / (r * r)
        return float(np.sqrt(np.sum((r * r * abs(div) ** 2) @ wq)))

    # ------------------------------------------------------------ traces
    def tangential_trace(self):
        """Pi_T u on the sphere: curl part w(1), gradient part v(1)."""
        _, v1, w1 = self.boundary_values()
        v1 = v1.copy()
        w1 = w1.copy()
        v1[0] = w1[0] = 0
        return TangentialSpectrum(self.L_max, w1, v1)

    def normal_trace(self):
        return ScalarSpectrum(self.L_max, self.boundary_values()[0].copy())

    # ------------------------------------------------------------ point values
    def evaluate(self, points, with_curl=True):
        """Cartesian values (and curl) at points in the ball (not the origin)."""
        p = np.atleast_2d(np.asarray(points, float))
        r = np.linalg.norm(p, axis=1)
        ell = mode_arrays(self.L_max)[0]
        lam = ell * (ell + 1.0)
        Y, G, T = vsh_all(self.L_max, p)
        d = self.radial(r)
        xh = p / r[:, None]
        u, v, w = d["u"].T, d["v"].T, d["w"].T
        F = (np.einsum("qj,qj->q", u, Y)[:, None] * xh
             + np.einsum("qj,qja->qa", v, G) + np.einsum("qj,qja->qa", w, T))
        if not with_curl:
            return F
        rv_p = (d["v"] + r * d["dv"]).T
        rw_p = (d["w"] + r * d["dw"]).T
        C = (np.einsum("qj,qja->qa", u - rv_p, T) + np.einsum("qj,qja->qa", rw_p, G)
             + np.einsum("qj,qj->q", w * lam, Y)[:, None] * xh) / r[:, None]
        return F, C


def field_norm_curl_k(field, k):
    l2, cu = field._mode_integrals()
    return float(np.sqrt(cu.sum() + k * k * l2.sum()))


def field_inner_l2(a, b):
    r, wq = a.nodes()
    da, db = a.radial(r), b.radial(r)
    ell = mode_arrays(a.L_max)[0]
    lam = (ell * (ell + 1.0))[:, None]
    integrand = r * r * (da["u"] * np.conj(db["u"]) + lam * (da["v"] * np.conj(db["v"]) + da["w"] * np.conj(db["w"])))
    return complex(np.sum(integrand @ wq))


def field_h1_norm_quadrature(field, n_r=None, L_quad=None, h=1e-3):
    """||u||_{H^1} by 3D quadrature with fourth-order finite-difference gradients."""
    from .harmonics import sphere_quadrature
    n_r = n_r or field.N_r + field.L_max + 8
    Lq = L_quad or 2 * field.L_max + 4
    r, wr = radial_rule(n_r)
    sq = sphere_quadrature(Lq)
    pts = (r[:, None, None] * sq.points[None]).reshape(-1, 3)
    wts = (wr[:, None] * r[:, None] ** 2 * sq.weights[None]).ravel()
    F = field.evaluate(pts, with_curl=False)
    g2 = np.zeros(len(pts))
    for e in np.eye(3):
        d = (-field.evaluate(pts + 2 * h * e, False) + 8 * field.evaluate(pts + h * e, False)
             - 8 * field.evaluate(pts - h * e, False) + field.evaluate(pts - 2 * h * e, False)) / (12 * h)
        g2 += np.sum(abs(d) ** 2, axis=1)
    return float(np.sqrt(np.sum(wts * (np.sum(abs(F) ** 2, axis=1) + g2))))


# ---------------------------------------------------------------- filters

def filter_gamma(spec, k, lam=DEFAULT_LAMBDA, part="low"):
    """L_Gamma keeps 1 <= l <= lam k (inclusive); H_Gamma = I - L_Gamma."""
    ell = spec.ell
    low = (ell >= 1) & (ell <= lam * k)
    keep = low if part == "low" else ~low
    if part not in ("low", "high"):
        raise ValueError("part must be 'low' or 'high'")
    return TangentialSpectrum(spec.L_max, np.where(keep, spec.v, 0), np.where(keep, spec.V, 0))


def vsh_filter_volume(field, a):
    ell = mode_arrays(field.L_max)[0]
    out = field.copy()
    out.coef[:, ell > a, :] = 0
    return out


# ---------------------------------------------------------------- L_Omega

def _lsq_with_constraint(A, g, a):
    """min ||A c|| subject to g . c = a, via a null-space basis of g."""
    g = np.asarray(g, float)
    c0 = a * g / (g @ g)
    _, _, Vh = np.linalg.svd(g[None, :])
    Z = Vh[1:].T
    y = np.linalg.lstsq(A @ Z, -(A @ c0), rcond=None)[0]
    return c0 + Z @ y


@lru_cache(maxsize=1024)
def _mode_factors(l, N):
    """Quadrature-sampled factors of the mode-l quadratic forms.

    Coefficients of a single mode are stacked as x = (c_u, c_v, c_w). Because
    the radial bases are orthonormal in L^2(r^2 dr), the L^2 Gram matrix is
    diag(1, lam, lam) blockwise; the curl Gram matrix is C^T C."""
    r, wq = radial_rule(N + l + 8)
    sw = np.sqrt(wq)[:, None]
    su, sv, sww = exponents(l)
    lam = l * (l + 1.0)
    Bu, _ = radial_basis(N, su, r)
    Bv, dBv = radial_basis(N, sv, r)
    Bw, dBw = radial_basis(N, sww, r)
    Z = np.zeros_like(Bu)
    rvp = Bv + r[:, None] * dBv
    rwp = Bw + r[:, None] * dBw
    C = np.vstack([np.hstack([Bu, -rvp, Z]) * np.sqrt(lam),
                   np.hstack([Z, Z, rwp]) * np.sqrt(lam),
                   np.hstack([Z, Z, Bw]) * lam]) * np.tile(sw, (3, 1))
    n1 = N + 1
    D = np.concatenate([np.ones(n1), np.full(n1, lam), np.full(n1, lam)])
    one = np.array([1.0])
    gv = radial_basis(N, sv, one)[0][0]
    gw = radial_basis(N, sww, one)[0][0]
    for arr in (C, D, gv, gw):
        arr.setflags(write=False)
    return C, D, gv, gw


def mode_gram(l, k, N):
    """||.||_{curl,k}^2 Gram matrix of one mode (real symmetric)."""
    C, D, _, _ = _mode_factors(l, N)
    return C.T @ C + k * k * np.diag(D)


@lru_cache(maxsize=1024)
def _mode_lift(l, k, N):
    """Minimum-energy extensions (x vectors) of unit gradient and unit curl traces."""
    C, D, gv, gw = _mode_factors(l, N)
    n1 = N + 1
    A = np.vstack([C, k * np.diag(np.sqrt(D))])
    uv = slice(0, 2 * n1)
    ext_grad = np.zeros(3 * n1)
    ext_grad[uv] = _lsq_with_constraint(A[:, uv], np.concatenate([np.zeros(n1), gv]), 1.0)
    ext_curl = np.zeros(3 * n1)
    ext_curl[2 * n1:] = _lsq_with_constraint(A[:, 2 * n1:], gw, 1.0)
    for arr in (ext_grad, ext_curl):
        if not np.all(np.isfinite(arr)):
            raise np.linalg.LinAlgError("radial solve failed for mode l=%d" % l)
        arr.setflags(write=False)
    return ext_grad, ext_curl


def mode_lift_matrix(l, k, N, lam=DEFAULT_LAMBDA):
    """Matrix of L_Omega restricted to mode l (zero for l = 0 and l > lam k)."""
    n1 = N + 1
    if not 1 <= l <= lam * k:
        return np.zeros((3 * n1, 3 * n1))
    _, _, gv, gw = _mode_factors(l, N)
    eg, ec = _mode_lift(l, k, N)
    return (np.outer(eg, np.concatenate([np.zeros(n1), gv, np.zeros(n1)]))
            + np.outer(ec, np.concatenate([np.zeros(2 * n1), gw])))


@lru_cache(maxsize=1024)
def _grad_map(l, N, Nt=None):
    """T: coefficients of psi = sum_{n <= Nt} c_n b_n (exponent max(l,1)) -> x of
    grad(psi Y) in the degree-N ansatz; also psi(1). Both gradient components lie
    in the ansatz when Nt <= N, so the projection below is exact."""
    Nt = N if Nt is None else Nt
    s = max(l, 1)
    r, wq = radial_rule(N + l + 8)
    P, dP = radial_basis(Nt, s, r)
    su, sv, _ = exponents(l)
    Bu = radial_basis(N, su, r)[0] * (r * r * wq)[:, None]
    Bv = radial_basis(N, sv, r)[0] * (r * r * wq)[:, None]
    n1 = N + 1
    T = np.zeros((3 * n1, Nt + 1))
    T[:n1] = Bu.T @ dP
    if l >= 1:
        T[n1:2 * n1] = Bv.T @ (P / r[:, None])
    psi1 = radial_basis(Nt, s, np.array([1.0]))[0][0]
    T.setflags(write=False)
    return T, psi1


def mode_projection_matrix(l, k, N, variant="adjoint", Nt=None):
    """Matrix of Pi^grad (forward) or Pi^{grad,*} (adjoint) on mode l.

    Forward: sum_j c_j ((phi_j, phi_i)) = ((w, phi_i)). The adjoint problem is the
    forward one with the boundary factor conjugated, i.e. posed at -k."""
    if variant not in ("forward", "adjoint"):
        raise ValueError("variant must be 'forward' or 'adjoint'")
    _, D, gv, _ = _mode_factors(l, N)
    T, psi1 = _grad_map(l, N, Nt)
    n1 = N + 1
    b = 0.0
    if l >= 1:
        _, sg = _symbols_by_ell(l, float(k))
        b = 1j * k * l * (l + 1.0) * sg[l]
        if variant == "adjoint":
            b = np.conj(b)
    trace_v = np.concatenate([np.zeros(n1), gv, np.zeros(n1)])
    rhs = k * k * T.T * D[None, :] + b * np.outer(psi1, trace_v)
    M = k * k * (T.T * D[None, :]) @ T + b * np.outer(psi1, psi1)
    return T @ np.linalg.solve(M, rhs), rhs


def _apply_modewise(field, build):
    """Apply per-l matrices build(l) to every (l, m) block of a field."""
    L, N = field.L_max, field.N_r
    ell = mode_arrays(L)[0]
    out = VolumeVshField.zeros(L, N)
    for l in range(L + 1):
        idx = np.nonzero(ell == l)[0]
        X = field.coef[:, idx, :].transpose(1, 0, 2).reshape(len(idx), -1)
        Y = X @ build(l).T
        out.coef[:, idx, :] = Y.reshape(len(idx), 3, N + 1).transpose(1, 0, 2)
    return out


def lift_L_Omega(trace_low, k, config=RadialSolveConfig()):
    """Minimum ||.||_{curl,k} extension of a tangential trace, mode by mode.

    The caller passes an already filtered trace. The l = 0 slot is ignored."""
    L, N = trace_low.L_max, config.N_r
    out = VolumeVshField.zeros(L, N)
    ell = mode_arrays(L)[0]
    for i in np.nonzero((ell >= 1) & ((trace_low.V != 0) | (trace_low.v != 0)))[0]:
        eg, ec = _mode_lift(int(ell[i]), float(k), N)
        out.coef[:, i, :] = (trace_low.V[i] * eg + trace_low.v[i] * ec).reshape(3, N + 1)
    return out


def L_Omega(field, k, lam=DEFAULT_LAMBDA):
    """L_Omega u = lift of L_Gamma Pi_T u."""
    return _apply_modewise(field, lambda l: mode_lift_matrix(l, float(k), field.N_r, lam))


def H_Omega(field, k, lam=DEFAULT_LAMBDA):
    return field - L_Omega(field, k, lam)


def helmholtz_project(field, k, variant="adjoint", N_r=None):
    """Spectral Pi^grad / Pi^{grad,*} for ((u,v)) = k^2 (u,v) + ik b_k(u^grad, v^grad).

    Returns (gradient part, remainder Pi^curl / Pi^{curl,*}, relative Galerkin residual).
    Test potentials psi Y have radial degree N_r (default: the field degree)."""
    N = field.N_r
    Nt = N if N_r is None else int(N_r)
    if not 1 <= Nt <= N:
        raise ValueError("test-space degree must lie in [1, field.N_r]")
    grad = _apply_modewise(field, lambda l: mode_projection_matrix(l, float(k), N, variant, Nt)[0])
    rem = field - grad
    ell = mode_arrays(field.L_max)[0]
    resid = 0.0
    for l in range(field.L_max + 1):
        _, rhs = mode_projection_matrix(l, float(k), N, variant, Nt)
        for i in np.nonzero(ell == l)[0]:
            x, y = field.coef[:, i].ravel(), rem.coef[:, i].ravel()
            scale = max(float(np.max(abs(rhs @ x))), 1e-300)
            resid = max(resid, float(np.max(abs(rhs @ y))) / scale if np.any(x) else 0.0)
    return grad, rem, resid


def double_product(a, b, k):
    """((a, b)) = k^2 (a, b) + ik b_k(a^grad, b^grad) for volume VSH fields."""
    ta, tb = a.tangential_trace(), b.tangential_trace()
    _, sg = symbols(a.L_max, k)
    bk = np.sum(ta.lam * sg * ta.V * np.conj(tb.V))
    return k * k * field_inner_l2(a, b) + 1j * k * bk


def v0_residual(field, k, which="V0"):
    """(||div u||_{L2}, ||ik<u,n> + div_G T_k Pi_T u||_{H^-1/2}) for V0, and
    with -div_G T_{-k} Pi_T u for V0*."""
    tr = field.tangential_trace()
    un = field.normal_trace()
    lamv = tr.lam
    if which == "V0":
        _, sg = symbols(field.L_max, k)
        g = 1j * k * un.c - lamv * sg * tr.V
    elif which == "V0star":
        _, sg = symbols(field.L_max, -k)
        g = 1j * k * un.c + lamv * sg * tr.V
    else:
        raise ValueError("which must be 'V0' or 'V0star'")
    return field.div_l2_norm(), scalar_hs_norm(ScalarSpectrum(field.L_max, g), -0.5)


def stable_split_ratio(field, k, lam=DEFAULT_LAMBDA):
    """(k||Pi^{curl,*} H_Omega v|| + k||Pi^{grad,*} H_Omega v||) / ||v||_{curl,k}."""
    Hv = H_Omega(field, k, lam)
    g, c, _ = helmholtz_project(Hv, k, "adjoint")
    return (k * c.l2_norm() + k * g.l2_norm()) / field_norm_curl_k(field, k)


def _gen_sup(S, G):
    """sqrt of the largest eigenvalue of S x = mu G x (G SPD)."""
    Lc = np.linalg.cholesky(G)
    Li = np.linalg.inv(Lc)
    H = Li @ S @ Li.conj().T
    return float(np.sqrt(max(np.linalg.eigvalsh(0.5 * (H + H.conj().T)).max(), 0.0)))


def stable_split_constant(k, L_max, N_r=24, lam=DEFAULT_LAMBDA):
    """Exact sup over the discrete space of
    sqrt(k^2 ||Pi^{curl,*} H v||^2 + k^2 ||Pi^{grad,*} H v||^2) / ||v||_{curl,k}.
    The sum form in the estimate lies between this value and sqrt(2) times it."""
    n1 = N_r + 1
    best = 0.0
    for l in range(L_max + 1):
        keep = slice(0, n1) if l == 0 else slice(0, 3 * n1)
        _, D, _, _ = _mode_factors(l, N_r)
        H = np.eye(3 * n1) - mode_lift_matrix(l, k, N_r, lam)
        P = mode_projection_matrix(l, k, N_r, "adjoint")[0]
        A, B = (np.eye(3 * n1) - P) @ H, P @ H
        S = k * k * (A.conj().T @ (D[:, None] * A) + B.conj().T @ (D[:, None] * B))
        G = mode_gram(l, k, N_r)
        best = max(best, _gen_sup(S[keep, keep], G[keep, keep]))
    return best


def lift_operator_norms(k, L_max, N_r=24, lam=DEFAULT_LAMBDA):
    """Exact (||L_Omega||, ||H_Omega||) in the ||.||_{curl,k} norm on the discrete space."""
    n1 = N_r + 1
    nl = nh = 0.0
    for l in range(1, L_max + 1):
        G = mode_gram(l, k, N_r)
        Lm = mode_lift_matrix(l, k, N_r, lam)
        Hm = np.eye(3 * n1) - Lm
        nl = max(nl, _gen_sup(Lm.T @ G @ Lm, G))
        nh = max(nh, _gen_sup(Hm.T @ G @ Hm, G))
    return nl, nh


# ---------------------------------------------------------------- serialization

def write_field_csv(field, path):
    ell, m = mode_arrays(field.L_max)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["ell", "m", "component"] + ["c%d" % n for n in range(field.N_r + 1)])
        for i in range(nmodes(field.L_max)):
            for ci, name in enumerate(COMPONENTS):
                w.writerow([ell[i], m[i], name] + [repr(complex(c)) for c in field.coef[ci, i]])


def read_field_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    head, body = rows[0], rows[1:]
    N = len(head) - 4
    L = max(int(r[0]) for r in body)
    f = VolumeVshField.zeros(L, N)
    for r in body:
        i = int(r[0]) ** 2 + int(r[0]) + int(r[1])
        f.coef[COMPONENTS.index(r[2]), i] = [complex(x) for x in r[3:]]
    return f
