"""Scalar and vector spherical harmonics on the unit sphere.

Conventions: complex orthonormal Y_l^m with Condon-Shortley phase; the flat
index of (l, m) is l^2 + l + m. Tangential fields are expanded as

    v_T = sum_{l>=1} v_l^m T_l^m + V_l^m grad_G Y_l^m,   T_l^m = grad_G Y_l^m x n,

so ``v`` holds the curl part and ``V`` the gradient part.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np


def nmodes(L):
    return (L + 1) ** 2


def mode_index(ell, m):
    return ell * ell + ell + m


def mode_arrays(L):
    ell = np.repeat(np.arange(L + 1), 2 * np.arange(L + 1) + 1)
    m = np.concatenate([np.arange(-l, l + 1) for l in range(L + 1)])
    return ell, m


@dataclass(frozen=True)
class ModeIndex:
    ell: int
    m: int

    def __post_init__(self):
        if self.ell < 0 or abs(self.m) > self.ell:
            raise ValueError("invalid mode (%d, %d)" % (self.ell, self.m))

    @property
    def index(self):
        return mode_index(self.ell, self.m)


@dataclass
class ScalarSpectrum:
    L_max: int
    c: np.ndarray

    @classmethod
    def zeros(cls, L):
        return cls(L, np.zeros(nmodes(L), dtype=complex))

    @classmethod
    def single(cls, L, ell, m, value=1.0):
        s = cls.zeros(L)
        s.c[mode_index(ell, m)] = value
        return s


@dataclass
class TangentialSpectrum:
    """Coefficients over the flat (l, m) index; the l = 0 slot is kept at zero."""

    L_max: int
    v: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        self.v = np.asarray(self.v, dtype=complex)
        self.V = np.asarray(self.V, dtype=complex)
        n = nmodes(self.L_max)
        if self.v.shape != (n,) or self.V.shape != (n,):
            raise ValueError("coefficient arrays must have length (L+1)^2")
        if self.v[0] != 0 or self.V[0] != 0:
            raise ValueError("tangential spectra carry no l = 0 entries")

    @classmethod
    def zeros(cls, L):
        return cls(L, np.zeros(nmodes(L), complex), np.zeros(nmodes(L), complex))

    @classmethod
    def single(cls, L, ell, m, part, value=1.0):
        s = cls.zeros(L)
        getattr(s, {"curl": "v", "grad": "V"}[part])[mode_index(ell, m)] = value
        return s

    @classmethod
    def random(cls, L, rng, decay=0.0):
        ell, _ = mode_arrays(L)
        w = (1.0 + ell) ** (-decay)
        z = lambda: (rng.standard_normal(nmodes(L)) + 1j * rng.standard_normal(nmodes(L))) * w
        v, V = z(), z()
        v[0] = V[0] = 0
        return cls(L, v, V)

    @property
    def ell(self):
        return mode_arrays(self.L_max)[0]

    @property
    def lam(self):
        l = self.ell
        return l * (l + 1.0)

    def copy(self):
        return TangentialSpectrum(self.L_max, self.v.copy(), self.V.copy())

    def __add__(self, other):
        if other.L_max != self.L_max:
            raise ValueError("band limits differ")
        return TangentialSpectrum(self.L_max, self.v + other.v, self.V + other.V)

    def __sub__(self, other):
        return self + other.scaled(-1.0)

    def scaled(self, a):
        return TangentialSpectrum(self.L_max, a * self.v, a * self.V)

    def curl_part(self):
        return TangentialSpectrum(self.L_max, self.v.copy(), np.zeros_like(self.V))

    def grad_part(self):
        return TangentialSpectrum(self.L_max, np.zeros_like(self.v), self.V.copy())

    def l2_inner(self, other):
        """(u_T, v_T)_Gamma via the orthogonality of the basis (norms lambda_l)."""
        return complex(np.sum(self.lam * (self.v * np.conj(other.v) + self.V * np.conj(other.V))))

    def l2_norm(self):
        return float(np.sqrt(np.sum(self.lam * (abs(self.v) ** 2 + abs(self.V) ** 2))))

    def truncated(self, L):
        out = TangentialSpectrum.zeros(L)
        n = nmodes(min(L, self.L_max))
        out.v[:n] = self.v[:n]
        out.V[:n] = self.V[:n]
        return out


# ---------------------------------------------------------------- evaluation

def _angles(points):
    p = np.atleast_2d(np.asarray(points, dtype=float))
    r = np.linalg.norm(p, axis=1)
    x, y, z = (p / r[:, None]).T
    ct = np.clip(z, -1.0, 1.0)
    st = np.hypot(x, y)
    phi = np.arctan2(y, x)
    return ct, st, phi


def legendre_normalized(L, ct, st):
    """Fully normalized P_l^m(cos t) for 0 <= m <= l <= L, so that
    Y_l^m = P_l^m e^{i m phi}. Returns array (npts, (L+1)^2) filled for m >= 0.

    The sectoral seed sin^m(t) is carried in scaled form to avoid underflow."""
    ct = np.asarray(ct, float)
    st = np.asarray(st, float)
    out = np.zeros((ct.size, nmodes(L)))
    logseed = np.full(ct.size, -0.5 * np.log(4 * np.pi))
    with np.errstate(divide="ignore"):
        logst = np.log(st)
    for m in range(L + 1):
        if m > 0:
            logseed = logseed + 0.5 * np.log((2 * m + 1) / (2.0 * m)) + logst
        shift = np.where(logseed < -600.0, 600.0, 0.0)
        sign = -1.0 if m % 2 else 1.0
        with np.errstate(under="ignore"):
            pmm = sign * np.exp(logseed + shift)
        out[:, mode_index(m, m)] = pmm * np.exp(-shift)
        if m == L:
            break
        p2, p1 = pmm, np.sqrt(2 * m + 3.0) * ct * pmm
        out[:, mode_index(m + 1, m)] = p1 * np.exp(-shift)
        for l in range(m + 2, L + 1):
            a = np.sqrt((4.0 * l * l - 1) / (l * l - m * m))
            b = np.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1) ** 2 - 1))
            p2, p1 = p1, a * (ct * p1 - b * p2)
            with np.errstate(under="ignore"):
                out[:, mode_index(l, m)] = p1 * np.exp(-shift)
    return out


def sph_harmonics_all(L, points):
    """Y_l^m at unit-sphere points (any nonzero vectors; only directions used).
    Returns complex array (npts, (L+1)^2)."""
    ct, st, phi = _angles(points)
    P = legendre_normalized(L, ct, st)
    ell, m = mode_arrays(L)
    Y = np.zeros(P.shape, dtype=complex)
    pos = m >= 0
    Y[:, pos] = P[:, pos] * np.exp(1j * np.outer(phi, m[pos]))
    # Y_l^{-m} = (-1)^m conj(Y_l^m)
    neg = np.nonzero(m < 0)[0]
    mirror = np.array([mode_index(l, -mm) for l, mm in zip(ell[neg], m[neg])], dtype=int)
    Y[:, neg] = ((-1.0) ** m[neg]) * np.conj(Y[:, mirror])
    return Y


def sph_harmonic(mode, theta, phi):
    mode = mode if isinstance(mode, ModeIndex) else ModeIndex(*mode)
    pt = np.array([[np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)]])
    return complex(sph_harmonics_all(mode.ell, pt)[0, mode.index])


def vsh_all(L, points):
    """(Y, grad_G Y, T) for all modes l <= L at the given directions.

    T = grad_G Y x n equals -i L Y with the angular momentum L = -i x x grad,
    evaluated through the ladder operators, and grad_G Y = n x T. Shapes are
    (npts, nm), (npts, nm, 3), (npts, nm, 3)."""
    p = np.atleast_2d(np.asarray(points, dtype=float))
    n = p / np.linalg.norm(p, axis=1)[:, None]
    Yx = sph_harmonics_all(L + 1, n)
    nm = nmodes(L)
    ell, m = mode_arrays(L)
    up = np.sqrt(ell * (ell + 1.0) - m * (m + 1.0))
    dn = np.sqrt(ell * (ell + 1.0) - m * (m - 1.0))
    iu = np.where(m < ell, ell * ell + ell + m + 1, 0)
    idn = np.where(m > -ell, ell * ell + ell + m - 1, 0)
    Lp = np.where(m < ell, up, 0.0) * Yx[:, iu]
    Lm = np.where(m > -ell, dn, 0.0) * Yx[:, idn]
    Y = Yx[:, :nm]
    T = np.empty((n.shape[0], nm, 3), dtype=complex)
    T[..., 0] = -0.5j * (Lp + Lm)
    T[..., 1] = -0.5 * (Lp - Lm)
    T[..., 2] = -1j * m * Y
    G = np.cross(n[:, None, :], T)
    return Y, G, T


def vsh_basis(mode, point):
    """(Y x_hat, grad_G Y, grad_G Y x x_hat) at one point."""
    mode = mode if isinstance(mode, ModeIndex) else ModeIndex(*mode)
    pt = np.asarray(point, float)
    xh = pt / np.linalg.norm(pt)
    Y, G, T = vsh_all(mode.ell, xh[None])
    i = mode.index
    return Y[0, i] * xh, G[0, i], T[0, i]


# ---------------------------------------------------------------- quadrature

@dataclass(frozen=True)
class SphereQuadrature:
    L: int
    points: np.ndarray
    weights: np.ndarray
    theta: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)

    @property
    def exactness_degree(self):
        return 2 * self.L + 1


def sphere_quadrature(L):
    """Gauss-Legendre in cos(theta) (L+1 nodes) times 2L+2 uniform phi nodes."""
    if L < 0:
        raise ValueError("L must be >= 0")
    x, w = np.polynomial.legendre.leggauss(L + 1)
    nphi = 2 * L + 2
    phi = 2 * np.pi * np.arange(nphi) / nphi
    X, P = np.meshgrid(x, phi, indexing="ij")
    W = np.repeat(w, nphi) * (2 * np.pi / nphi)
    st = np.sqrt(1 - X.ravel() ** 2)
    pts = np.stack([st * np.cos(P.ravel()), st * np.sin(P.ravel()), X.ravel()], axis=1)
    return SphereQuadrature(L, pts, W, np.arccos(X.ravel()), P.ravel())


# ---------------------------------------------------------------- transforms

def analyze_scalar(samples, quad, L=None):
    L = quad.L if L is None else L
    Y = sph_harmonics_all(L, quad.points)
    return ScalarSpectrum(L, (quad.weights * np.asarray(samples)) @ np.conj(Y))


def synthesize_scalar(spec, points):
    return sph_harmonics_all(spec.L_max, points) @ spec.c


def analyze_tangential(samples, quad, L=None, tol=1e-10):
    """Coefficients of a tangential field sampled at quad.points (shape (N, 3))."""
    L = quad.L if L is None else L
    f = np.asarray(samples)
    n = quad.points
    normal = np.einsum("ij,ij->i", f, n)
    fn = np.sqrt(np.sum(quad.weights * np.sum(abs(f) ** 2, axis=1)))
    nn = np.sqrt(np.sum(quad.weights * abs(normal) ** 2))
    if nn > tol * max(fn, 1e-300):
        raise ValueError("field is not tangential: normal-component norm %.3e (field norm %.3e)" % (nn, fn))
    _, G, T = vsh_all(L, n)
    lam = mode_arrays(L)[0] * (mode_arrays(L)[0] + 1.0)
    lam[0] = 1.0
    wf = quad.weights[:, None] * f
    v = np.einsum("qa,qja->j", wf, np.conj(T)) / lam
    V = np.einsum("qa,qja->j", wf, np.conj(G)) / lam
    v[0] = V[0] = 0
    return TangentialSpectrum(L, v, V)


def synthesize_tangential(spec, points):
    _, G, T = vsh_all(spec.L_max, points)
    return np.einsum("qja,j->qa", T, spec.v) + np.einsum("qja,j->qa", G, spec.V)


# ---------------------------------------------------------------- surface calculus

def surface_grad(spec):
    """grad_G of a scalar spectrum (the l = 0 term drops)."""
    V = spec.c.copy()
    V[0] = 0
    return TangentialSpectrum(spec.L_max, np.zeros_like(V), V)


def surface_div(spec):
    """div_G v_T = -sum lambda_l V_l^m Y_l^m, so that div_G grad_G = Delta_G."""
    ell = spec.ell
    return ScalarSpectrum(spec.L_max, -ell * (ell + 1.0) * spec.V)


def surface_curl(spec):
    """curl_G v_T = <curl v*, n> = sum lambda_l v_l^m Y_l^m."""
    ell = spec.ell
    return ScalarSpectrum(spec.L_max, ell * (ell + 1.0) * spec.v)


def cross_normal(spec):
    """Spectrum of v_T x n: T x n = -grad_G Y and grad_G Y x n = T."""
    return TangentialSpectrum(spec.L_max, spec.V.copy(), -spec.v)


def scalar_hs_norm(spec, s):
    ell = mode_arrays(spec.L_max)[0]
    w = (np.where(ell == 0, 1.0, 0.0) + ell * (ell + 1.0)) ** s
    return float(np.sqrt(np.sum(w * abs(spec.c) ** 2)))


def trace_norm(spec, kind, s=0.0):
    """Norms of tangential traces: 'H^s' (tangential H^s_T), '-1/2,curl', '-1/2,div'."""
    lam = spec.lam
    a, b = abs(spec.v) ** 2, abs(spec.V) ** 2
    if kind in ("H^s", "Hs"):
        val = np.sum(lam ** (s + 1) * (a + b))
    elif kind == "-1/2,curl":
        val = np.sum(np.sqrt(lam) * ((1 + lam) * a + b))
    elif kind == "-1/2,div":
        val = np.sum(np.sqrt(lam) * (a + (1 + lam) * b))
    else:
        raise ValueError("unknown norm kind %r" % kind)
    return float(np.sqrt(val))


# ---------------------------------------------------------------- serialization

def write_spectrum_csv(spec, path):
    ell, m = mode_arrays(spec.L_max)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["ell", "m", "re_v", "im_v", "re_V", "im_V"])
        for i in range(1, nmodes(spec.L_max)):
            w.writerow([ell[i], m[i]] + [repr(float(x)) for x in (spec.v[i].real, spec.v[i].imag,
                                                                   spec.V[i].real, spec.V[i].imag)])


def read_spectrum_csv(path):
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    L = max(int(r["ell"]) for r in rows)
    s = TangentialSpectrum.zeros(L)
    for r in rows:
        i = mode_index(int(r["ell"]), int(r["m"]))
        s.v[i] = float(r["re_v"]) + 1j * float(r["im_v"])
        s.V[i] = float(r["re_V"]) + 1j * float(r["im_V"])
    return s
