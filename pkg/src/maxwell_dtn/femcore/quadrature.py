"""Collapsed (conical product) Gauss rules on the reference simplices."""

from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi


@lru_cache(maxsize=64)
def line_rule(degree):
    n = max(1, (degree + 2) // 2)
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1), 0.5 * w


@lru_cache(maxsize=64)
def tri_rule(degree):
    """Points (n, 2) and weights on {s, t >= 0, s + t <= 1}; weights sum to 1/2."""
    n = max(1, (degree + 2) // 2)
    a, wa = roots_jacobi(n, 1, 0)
    b, wb = np.polynomial.legendre.leggauss(n)
    u, v = 0.5 * (a + 1), 0.5 * (b + 1)
    U, V = np.meshgrid(u, v, indexing="ij")
    W = np.outer(wa / 4, wb / 2)
    pts = np.stack([U.ravel(), ((1 - U) * V).ravel()], axis=1)
    return pts, W.ravel()


@lru_cache(maxsize=64)
def tet_rule(degree):
    """Points (n, 3) and weights on the unit tetrahedron; weights sum to 1/6."""
    n = max(1, (degree + 2) // 2)
    a, wa = roots_jacobi(n, 2, 0)
    b, wb = roots_jacobi(n, 1, 0)
    c, wc = np.polynomial.legendre.leggauss(n)
    u, v, w = 0.5 * (a + 1), 0.5 * (b + 1), 0.5 * (c + 1)
    U, V, Wc = np.meshgrid(u, v, w, indexing="ij")
    W = np.einsum("i,j,k->ijk", wa / 8, wb / 4, wc / 2)
    pts = np.stack([U.ravel(), ((1 - U) * V).ravel(), ((1 - U) * (1 - V) * Wc).ravel()], axis=1)
    return pts, W.ravel()
