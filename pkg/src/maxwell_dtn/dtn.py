"""The capacity operator T_k on the unit sphere and the boundary form b_k.

T_k is diagonal in the (T_l^m, grad_G Y_l^m) basis: the curl part is scaled
by (z_l(k)+1)/(ik), the gradient part by ik/(z_l(k)+1). The adjoint is T_{-k}.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .harmonics import TangentialSpectrum, mode_arrays
from .specfun import zl_all

DEFAULT_LAMBDA = 2.0
DEFAULT_LAMBDA0 = 1.5


@dataclass(frozen=True)
class CapacityConfig:
    k: float
    lam: float = DEFAULT_LAMBDA
    L_max: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k >= 1 required")
        if self.lam <= 1:
            raise ValueError("lambda > 1 required")
        if self.L_max and self.L_max < self.lam * self.k:
            raise ValueError("L_max must be >= lambda k")


@lru_cache(maxsize=256)
def _symbols_by_ell(L, k):
    z = zl_all(L, k)
    ik = 1j * k
    sc = (z + 1) / ik
    sg = ik / (z + 1)
    sc[0] = sg[0] = 0
    sc.setflags(write=False)
    sg.setflags(write=False)
    return sc, sg


def symbols(L, k):
    """Per-flat-mode multipliers (curl part, gradient part) of T_k; k < 0 gives T_{-|k|}."""
    sc, sg = _symbols_by_ell(int(L), float(k))
    ell = mode_arrays(L)[0]
    return sc[ell], sg[ell]


def low_mask(L, k, lam):
    ell = mode_arrays(L)[0]
    return (ell >= 1) & (ell <= lam * abs(k))


def apply_capacity(spec, k, sign=+1):
    kk = k if sign > 0 else -k
    sc, sg = symbols(spec.L_max, kk)
    return TangentialSpectrum(spec.L_max, sc * spec.v, sg * spec.V)


def apply_capacity_filtered(spec, config, part, sign=+1):
    if part not in ("low", "high"):
        raise ValueError("part must be 'low' or 'high'")
    out = apply_capacity(spec, config.k, sign)
    low = low_mask(spec.L_max, config.k, config.lam)
    keep = low if part == "low" else ~low
    out.v[~keep] = 0
    out.V[~keep] = 0
    return out


def form_bk(u, v, k, filter="none", lam=DEFAULT_LAMBDA):
    """b_k(u_T, v_T) = (T_k u_T, v_T)_Gamma as a diagonal sum."""
    Tu = apply_capacity(u, k)
    if filter != "none":
        if filter not in ("low", "high"):
            raise ValueError("filter must be 'none', 'low' or 'high'")
        low = low_mask(u.L_max, k, lam)
        drop = ~low if filter == "low" else low
        Tu.v[drop] = 0
        Tu.V[drop] = 0
    return Tu.l2_inner(v)


def adjoint_check(u, v, k):
    """|(T_k u, v)_G - (u, T_{-k} v)_G|."""
    lhs = apply_capacity(u, k).l2_inner(v)
    rhs = u.l2_inner(apply_capacity(v, k, sign=-1))
    return abs(lhs - rhs)


def sign_law_margins(L, k):
    """Min of Im[(z+1)/(ik)] and max of Im[ik/(z+1)] over 1 <= l <= L."""
    sc, sg = _symbols_by_ell(int(L), float(k))
    return float(np.min(sc[1:].imag)), float(np.max(sg[1:].imag))


# ---------------------------------------------------------------- probes

def bhigh_constant(k, lam=DEFAULT_LAMBDA, rho1=0.0, rho2=0.0, L_max=None):
    """Sharpest C with |b_k^high(u^grad, v^grad)| <= C k (lam k)^-(rho1+rho2+3)
    ||div u||_{H^rho1} ||div v||_{H^rho2}, i.e. the worst mode l > lam k."""
    L = L_max or int(max(8 * lam * k, 60))
    _, sg = _symbols_by_ell(L, float(k))
    ell = np.arange(L + 1)
    lm = ell * (ell + 1.0)
    sel = ell > lam * k
    c = abs(sg[sel]) * lm[sel] ** (-1 - 0.5 * (rho1 + rho2)) * (lam * k) ** (rho1 + rho2 + 3) / k
    return float(c.max())


def bhigh_limit(lam=DEFAULT_LAMBDA):
    """k -> infinity limit of bhigh_constant at rho = 0: the evanescent-mode value
    |ik/(z_l+1)| ~ k/sqrt(l^2 - k^2) at l = lam k gives lam/sqrt(lam^2 - 1)."""
    return lam / np.sqrt(lam * lam - 1)


def dtn_norm(k, L_max=None):
    """Norm of T_k from the -1/2,curl to the -1/2,div trace norm (mode-wise sup)."""
    L = L_max or int(max(8 * k, 60))
    sc, sg = _symbols_by_ell(L, float(k))
    lm = np.arange(L + 1) * (np.arange(L + 1) + 1.0)
    r = np.maximum(abs(sc[1:]) / np.sqrt(1 + lm[1:]), abs(sg[1:]) * np.sqrt(1 + lm[1:]))
    return float(r.max())


def fit_power(ks, values):
    """Least-squares fit values ~ C k^e in log-log; returns (C, e)."""
    A = np.vstack([np.ones(len(ks)), np.log(ks)]).T
    c, e = np.linalg.lstsq(A, np.log(values), rcond=None)[0]
    return float(np.exp(c)), float(e)


def dtn_probe(k_grid, lam=DEFAULT_LAMBDA, rho=(0.0, 0.0)):
    """Rows (k, ell_max, quantity, fitted_constant, fitted_exponent)."""
    rows = []
    for name, fn, power in (
        ("bhigh_grad", lambda k: bhigh_constant(k, lam, *rho), 0.0),
        ("dtn_norm", dtn_norm, 2.0),
    ):
        vals = [fn(k) for k in k_grid]
        C, e = fit_power(k_grid, vals)
        for k, v in zip(k_grid, vals):
            rows.append(dict(k=k, ell_max=int(max(8 * lam * k, 60)), quantity=name,
                             value=v, fitted_constant=C, fitted_exponent=e, bound_power=power))
    return rows


def write_probe_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "ell_max", "quantity", "fitted_constant", "fitted_exponent"])
        for r in rows:
            w.writerow([r["k"], r["ell_max"], r["quantity"], "%.12g" % r["fitted_constant"],
                        "%.12g" % r["fitted_exponent"]])
