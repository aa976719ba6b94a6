"""Spherical Bessel/Hankel functions, the symbol z_l(k) and the combinatorial
quantities a_{m,n}, rho_n(k), gamma_lambda(eps)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

BOUND_SLACK = 1e-12


@dataclass(frozen=True)
class SymbolValue:
    ell: int
    k: float
    z: complex


@dataclass(frozen=True)
class RationalSymbolForm:
    """z_l(r) = -p(r^-2)/q(r^-2) + i r/q(r^-2); coefficients in powers of r^-2."""

    ell: int
    p_coeffs: tuple
    q_coeffs: tuple

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        x = r ** -2.0
        p = _horner([float(c) for c in self.p_coeffs], x)
        q = _horner([float(c) for c in self.q_coeffs], x)
        return -p / q + 1j * r / q


def _horner(coeffs, x):
    out = np.zeros_like(x) + coeffs[-1]
    for c in coeffs[-2::-1]:
        out = out * x + c
    return out


# ---------------------------------------------------------------- Bessel/Hankel

def _miller_start(ell, rmax):
    return int(max(ell, rmax) + 40 + 8 * rmax ** (1.0 / 3.0))


def spherical_jn_all(L, r):
    """j_0..j_L at (array) r > 0 by downward Miller recurrence, normalized by
    the sum rule sum (2n+1) j_n^2 = 1."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    N = _miller_start(L, float(r.max()))
    out = np.zeros((L + 1, r.size))
    fp1 = np.zeros_like(r)
    f = np.full_like(r, 1e-20)
    norm = np.zeros_like(r)
    for n in range(N, -1, -1):
        # f holds the (unnormalized) j_n
        norm += (2 * n + 1) * f * f
        if n <= L:
            out[n] = f
        fm1 = (2 * n + 1) / r * f - fp1
        fp1, f = f, fm1
        big = np.abs(f) > 1e100
        if np.any(big):
            s = np.where(big, 1e-100, 1.0)
            f = f * s
            fp1 = fp1 * s
            norm = norm * s * s
            out *= s
    return out / np.sqrt(norm)


def spherical_yn_all(L, r):
    """y_0..y_L by forward recurrence; raises OverflowError if |y_l| overflows."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    out = np.empty((L + 1, r.size))
    out[0] = -np.cos(r) / r
    if L >= 1:
        out[1] = -np.cos(r) / r ** 2 - np.sin(r) / r
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(1, L):
            out[n + 1] = (2 * n + 1) / r * out[n] - out[n - 1]
    if not np.all(np.isfinite(out)):
        raise OverflowError("spherical y_l overflows for l=%d, min r=%g" % (L, r.min()))
    return out


def spherical_hankel1(ell, r):
    """(h_l^(1)(r), d/dr h_l^(1)(r)) for l >= 0, r > 0 (scalar or array)."""
    if ell < 0:
        raise ValueError("ell must be >= 0")
    ra = np.asarray(r, dtype=float)
    if np.any(ra <= 0):
        raise ValueError("r must be positive")
    scalar = ra.ndim == 0
    ra = np.atleast_1d(ra)
    j = spherical_jn_all(ell + 1, ra)
    y = spherical_yn_all(ell + 1, ra)
    h = j + 1j * y
    if ell == 0:
        dh = -h[1]
    else:
        dh = h[ell - 1] - (ell + 1) / ra * h[ell]
    hv, dhv = h[ell], dh
    if scalar:
        return complex(hv[0]), complex(dhv[0])
    return hv, dhv


# ---------------------------------------------------------------- the symbol

def zl_all(L, k):
    """z_0(k)..z_L(k) via the ratio recurrence R_n = h_{n-1}/h_n (no overflow).
    Negative k returns the conjugate values z_l(-k) = conj z_l(|k|)."""
    k = float(k)
    if k == 0:
        raise ValueError("k must be nonzero")
    r = abs(k)
    z = np.empty(L + 1, dtype=complex)
    z[0] = -1.0 + 1j * r
    R = 1j * r / (r + 1j)
    for n in range(1, L + 1):
        if n > 1:
            R = 1.0 / ((2 * n - 1) / r - R)
        z[n] = r * R - (n + 1)
    return z if k > 0 else np.conj(z)


def zl_symbol(ell, k):
    return complex(zl_all(ell, k)[ell])


def symbol_value(ell, k):
    return SymbolValue(ell, float(k), zl_symbol(ell, k))


# ---------------------------------------------------------------- exact forms

def a_coeff(m, n):
    if not 0 <= m <= n:
        raise ValueError("need 0 <= m <= n")
    f = math.factorial
    return Fraction(f(2 * m) * f(n + m), f(m) ** 2 * 4 ** m * f(n - m))


def _gmul(a, b):
    # product of polynomials with Gaussian-rational coefficients (re, im)
    out = [(Fraction(0), Fraction(0))] * (len(a) + len(b) - 1)
    for i, (ar, ai) in enumerate(a):
        for j, (br, bi) in enumerate(b):
            cr, ci = out[i + j]
            out[i + j] = (cr + ar * br - ai * bi, ci + ar * bi + ai * br)
    return out


@lru_cache(maxsize=None)
def zl_rational_form(ell):
    """Derive p_l, q_l from the finite expansion
    h_l(r) = (-i)^{l+1} e^{ir}/r * S(1/r),  S(t) = sum_m c_m (i t)^m,
    c_m = (l+m)!/(m! (l-m)! 2^m).  Then q = |S|^2 and, with t = 1/r,
    z = i r - 1 - t S'(t) conj S(t) / q, which collapses to -p/q + i r/q."""
    f = math.factorial
    S = []
    for m in range(ell + 1):
        c = Fraction(f(ell + m), f(m) * f(ell - m) * 2 ** m)
        S.append([(c, 0), (0, c), (-c, 0), (0, -c)][m % 4])
    S = [(Fraction(a), Fraction(b)) for a, b in S]
    Sc = [(a, -b) for a, b in S]
    tSp = [(m * a, m * b) for m, (a, b) in enumerate(S)]
    q_t = _gmul(S, Sc)
    w_t = _gmul(tSp, Sc)
    q, p = [], []
    for j in range(2 * ell + 1):
        qr, qi = q_t[j]
        wr, _ = w_t[j]
        if j % 2:
            if qr != 0 or qi != 0 or wr != 0:
                raise ArithmeticError("odd powers of 1/r do not cancel")
            continue
        if qi != 0:
            raise ArithmeticError("|S|^2 has imaginary part")
        q.append(qr)
        p.append(qr + wr)
    # imaginary part: Im(t S' conj S) must equal (q - 1)/t
    wi = [b for _, b in w_t] + [Fraction(0)]
    for j in range(2 * ell + 1):
        target = q_t[j + 1][0] if j + 1 < len(q_t) else Fraction(0)
        if wi[j] != target:
            raise ArithmeticError("Wronskian identity fails")
    return RationalSymbolForm(ell, tuple(p), tuple(q))


# ---------------------------------------------------------------- rho_n, gamma

def rho_n(n, k):
    """rho_n(k) = sum a_{m,n} k^{-2m} / sum (m+1) a_{m,n} k^{-2m} (log-scaled)."""
    k = float(k)
    if n < 0 or k <= 0:
        raise ValueError("need n >= 0 and k > 0")
    m = np.arange(n + 1)
    logt = np.zeros(n + 1)
    if n:
        mm = m[1:]
        step = np.log((2 * mm - 1) * (n + mm) * (n - mm + 1.0)) - np.log(2.0 * mm) - 2 * np.log(k)
        logt[1:] = np.cumsum(step)
    t = np.exp(logt - logt.max())
    return float(t.sum() / ((m + 1) * t).sum())


def gamma_lambda(lam, eps):
    lam = float(lam)
    if lam <= 1:
        raise ValueError("lambda must exceed 1")
    mu = math.sqrt(1.0 - lam ** -2)
    eps = np.asarray(eps, dtype=float)
    if np.any(eps <= -1) or np.any(eps >= 1 / mu - 1):
        raise ValueError("eps outside (-1, 1/mu - 1)")

    def xlogx(x):
        return np.where(x > 0, x * np.log(np.where(x > 0, x, 1.0)), 0.0)

    a = mu * (1 + eps)
    lg = (xlogx(1 + a) - xlogx(1 - a) + xlogx(1 - mu) - xlogx(1 + mu)
          + 2 * mu * eps * (math.log(lam) - 1))
    out = np.exp(lg)
    return float(out) if out.ndim == 0 else out


def gamma_second_derivative_at_zero(lam):
    return -2 * (lam * lam - 1) ** 1.5 / lam


def taylor_constants(lam, scale=0.1, n=81):
    """Fitted (c1, c2) with 1 - c1 lam^2 eps^2 <= gamma_lam(eps) <= 1 - c2 lam^2 eps^2
    on the window |eps| lam^2 <= scale (eps = 0 excluded)."""
    eps = np.linspace(-scale, scale, n) / lam ** 2
    eps = eps[eps != 0]
    q = (1 - gamma_lambda(lam, eps)) / (lam * eps) ** 2
    return float(q.max()), float(q.min())


# ---------------------------------------------------------------- bound sweep

@dataclass
class BoundRow:
    check_id: str
    k: float
    n: int
    lhs: float
    rhs: float
    passed: bool


@dataclass
class BoundReport:
    rows: list
    violations: int
    c0: dict
    worst: dict

    @property
    def c0_spread(self):
        v = np.array(list(self.c0.values()))
        return float(v.max() / v.min() - 1.0)


def check_symbol_bounds(k_grid, n_max, lambda0=1.5, lam=None, slack=BOUND_SLACK, keep_rows=False):
    """Sweep the three symbol inequalities over all n <= n_max for each k.

    (a) k/|z_n+1| <= 2 sqrt2 k; (b) for n > lam k^2 (lam defaults to lambda0),
    k/|z_n+1| <= 2 sqrt2 (2/lambda0 + 1) k/(n+1); (c) |z_n+1|/k <= 1 + n/k.
    Also records C0 = sup_{n >= lambda0 k} (n+1)/|z_n+1|."""
    lam = lambda0 if lam is None else lam
    rows, worst, c0 = [], {}, {}
    violations = 0
    s2 = 2 * math.sqrt(2)
    for k in k_grid:
        if k < 1:
            raise ValueError("bounds are stated for k >= 1")
        n = np.arange(n_max + 1)
        a = np.abs(zl_all(n_max, k) + 1)
        checks = {
            "a": (k / a, np.full(n.size, s2 * k), np.ones(n.size, bool)),
            "b": (k / a, s2 * (2 / lambda0 + 1) * k / (n + 1), n > lam * k * k),
            "c": (a / k, 1 + n / k, np.ones(n.size, bool)),
        }
        for cid, (lhs, rhs, mask) in checks.items():
            ok = lhs <= rhs * (1 + slack)
            bad = int(np.sum(~ok & mask))
            violations += bad
            if mask.any():
                ratio = np.where(mask, lhs / rhs, -np.inf)
                i = int(np.argmax(ratio))
                worst[(cid, k)] = (int(n[i]), float(lhs[i]), float(rhs[i]))
                rows.append(BoundRow(cid, k, int(n[i]), float(lhs[i]), float(rhs[i]), bad == 0))
                if keep_rows:
                    for j in np.nonzero(mask)[0]:
                        rows.append(BoundRow(cid, k, int(n[j]), float(lhs[j]), float(rhs[j]), bool(ok[j])))
        sel = n >= lambda0 * k
        if sel.any():
            c0[k] = float(np.max((n[sel] + 1) / a[sel]))
            rows.append(BoundRow("C0", k, int(n[sel][np.argmax((n[sel] + 1) / a[sel])]), c0[k], float("nan"), True))
    return BoundReport(rows, violations, c0, worst)
