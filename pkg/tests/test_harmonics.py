import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import sph_harm_y

from maxwell_dtn.harmonics import (ModeIndex, ScalarSpectrum, TangentialSpectrum,
                                   analyze_scalar, analyze_tangential, cross_normal,
                                   mode_arrays, mode_index, nmodes, read_spectrum_csv,
                                   sph_harmonic, sph_harmonics_all, sphere_quadrature,
                                   surface_curl, surface_div, surface_grad,
                                   synthesize_scalar, synthesize_tangential, trace_norm,
                                   vsh_all, vsh_basis, write_spectrum_csv)


def random_dirs(n, seed=0):
    p = np.random.default_rng(seed).standard_normal((n, 3))
    return p / np.linalg.norm(p, axis=1)[:, None]


def test_mode_index_layout():
    assert nmodes(3) == 16
    assert mode_index(0, 0) == 0 and mode_index(2, -2) == 4
    ell, m = mode_arrays(2)
    assert list(ell) == [0, 1, 1, 1, 2, 2, 2, 2, 2]
    assert list(m) == [0, -1, 0, 1, -2, -1, 0, 1, 2]
    with pytest.raises(ValueError):
        ModeIndex(2, 3)


def test_constant_mode():
    assert abs(sph_harmonic((0, 0), 0.3, 1.2) - 1 / np.sqrt(4 * np.pi)) < 1e-15


def test_against_scipy():
    p = random_dirs(50)
    th, ph = np.arccos(p[:, 2]), np.arctan2(p[:, 1], p[:, 0])
    Y = sph_harmonics_all(40, p)
    ell, m = mode_arrays(40)
    ref = np.stack([sph_harm_y(l, mm, th, ph) for l, mm in zip(ell, m)], axis=1)
    assert np.max(abs(Y - ref)) < 1e-12


def test_high_degree_finite():
    Y = sph_harmonics_all(220, random_dirs(5))
    assert np.all(np.isfinite(Y))


def test_quadrature_basics():
    q0 = sphere_quadrature(0)
    assert abs(q0.weights.sum() - 4 * np.pi) < 1e-14
    q = sphere_quadrature(10)
    Y = sph_harmonics_all(5, q.points)
    i, j = mode_index(3, 2), mode_index(5, 1)
    assert abs(np.sum(q.weights * Y[:, i] * np.conj(Y[:, i])) - 1) < 1e-13
    assert abs(np.sum(q.weights * Y[:, i] * np.conj(Y[:, j]))) < 1e-13


def test_gram_defect_l20():
    q = sphere_quadrature(20)
    Y = sph_harmonics_all(20, q.points)
    G = (np.conj(Y).T * q.weights) @ Y
    assert np.max(abs(G - np.eye(G.shape[0]))) <= 1e-12


def test_vsh_orthogonality_and_norms():
    L = 8
    q = sphere_quadrature(L + 1)
    _, G, T = vsh_all(L, q.points)
    lam = mode_arrays(L)[0] * (mode_arrays(L)[0] + 1.0)
    GG = np.einsum("q,qia,qja->ij", q.weights, np.conj(G), G)
    TT = np.einsum("q,qia,qja->ij", q.weights, np.conj(T), T)
    GT = np.einsum("q,qia,qja->ij", q.weights, np.conj(G), T)
    assert np.max(abs(GG - np.diag(lam))) < 1e-12
    assert np.max(abs(TT - np.diag(lam))) < 1e-12
    assert np.max(abs(GT)) < 1e-12


def test_vsh_pointwise():
    p = random_dirs(30, 1)
    Y, G, T = vsh_all(6, p)
    assert np.max(abs(np.einsum("qja,qja->qj", G, T))) < 1e-13  # real dot, G.T = 0 pointwise
    assert np.max(abs(np.einsum("qja,qa->qj", G, p))) < 1e-13
    assert np.max(abs(T - np.cross(G, p[:, None, :]))) < 1e-13  # T = grad_G Y x n
    _, U0, V0 = vsh_basis((0, 0), p[0])
    assert np.all(U0 == 0) and np.all(V0 == 0)


def test_surface_gradient_finite_differences():
    # grad of the 0-homogeneous extension Y(x/|x|) equals grad_G Y on the sphere
    p = random_dirs(10, 2)
    _, G, _ = vsh_all(5, p)
    h = 1e-5
    fd = np.zeros_like(G)
    for a in range(3):
        e = np.zeros(3)
        e[a] = h
        up = p + e
        dn = p - e
        fd[..., a] = (sph_harmonics_all(5, up / np.linalg.norm(up, axis=1)[:, None])
                      - sph_harmonics_all(5, dn / np.linalg.norm(dn, axis=1)[:, None])) / (2 * h)
    assert np.max(abs(fd - G)) < 1e-8


def test_round_trips():
    rng = np.random.default_rng(3)
    L = 12
    q = sphere_quadrature(L + 1)
    s = TangentialSpectrum.random(L, rng)
    back = analyze_tangential(synthesize_tangential(s, q.points), q, L)
    assert np.max(abs(back.v - s.v)) < 1e-10 and np.max(abs(back.V - s.V)) < 1e-10
    c = ScalarSpectrum(L, rng.standard_normal(nmodes(L)) + 0j)
    assert np.max(abs(analyze_scalar(synthesize_scalar(c, q.points), q, L).c - c.c)) < 1e-10
    # Parseval
    f = synthesize_tangential(s, q.points)
    l2 = np.sqrt(np.sum(q.weights * np.sum(abs(f) ** 2, axis=1)))
    assert abs(l2 - s.l2_norm()) < 1e-10 * s.l2_norm()


def test_basis_round_trip_examples():
    L = 5
    q = sphere_quadrature(L + 1)
    _, G, T = vsh_all(L, q.points)
    s = analyze_tangential(G[:, mode_index(2, 1)], q, L)
    e = TangentialSpectrum.single(L, 2, 1, "grad")
    assert np.max(abs(s.V - e.V)) < 1e-11 and np.max(abs(s.v)) < 1e-11
    s = analyze_tangential(T[:, mode_index(3, -2)], q, L)
    assert abs(s.v[mode_index(3, -2)] - 1) < 1e-11 and np.sum(abs(s.v)) - 1 < 1e-10
    p = random_dirs(7)
    f = synthesize_tangential(TangentialSpectrum.single(L, 1, 0, "curl"), p)
    assert np.max(abs(f - vsh_all(1, p)[2][:, mode_index(1, 0)])) < 1e-12
    assert np.all(synthesize_tangential(TangentialSpectrum.zeros(L), p) == 0)


def test_analyze_rejects_normal_component():
    q = sphere_quadrature(4)
    with pytest.raises(ValueError, match="not tangential"):
        analyze_tangential(q.points.astype(complex), q)


def test_surface_operators():
    L = 20
    # eigenvalue identity exactly: -div_G grad_G Y = lambda Y
    for l in range(L + 1):
        for m in (-l, 0, l):
            d = surface_div(surface_grad(ScalarSpectrum.single(L, l, m)))
            expect = np.zeros(nmodes(L))
            expect[mode_index(l, m)] = l * (l + 1)
            assert np.array_equal(-d.c, expect)
    d = surface_div(surface_grad(ScalarSpectrum.single(4, 2, 0)))
    assert d.c[mode_index(2, 0)] == -6
    assert np.all(surface_div(TangentialSpectrum.single(4, 3, 1, "curl")).c == 0)
    assert np.all(surface_curl(TangentialSpectrum.single(4, 3, 1, "grad")).c == 0)


def test_surface_divergence_sign_by_finite_differences():
    # div of the normal-constant extension of grad_G Y_3^2, evaluated on |x| = 1
    i = mode_index(3, 2)

    def field(x):
        r = np.linalg.norm(x, axis=1)
        _, G, _ = vsh_all(3, x / r[:, None])
        return G[:, i]
    p = random_dirs(6, 4)
    h = 1e-5
    div = sum((field(p + h * e)[:, a] - field(p - h * e)[:, a]) / (2 * h) for a, e in enumerate(np.eye(3)))
    Y = sph_harmonics_all(3, p)[:, i]
    # extension is 0-homogeneous so div equals the surface divergence on the sphere
    assert np.max(abs(div - (-12) * Y)) < 1e-6


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 10), st.integers(0, 2 ** 31 - 1))
def test_div_of_cross_equals_curl(L, seed):
    s = TangentialSpectrum.random(L, np.random.default_rng(seed))
    assert np.max(abs(surface_div(cross_normal(s)).c - surface_curl(s).c)) < 1e-12


def test_trace_norm_examples():
    s = TangentialSpectrum.single(3, 1, 0, "grad")
    assert abs(trace_norm(s, "H^s", 0.0) - np.sqrt(2)) < 1e-15
    s = TangentialSpectrum.single(3, 1, 0, "curl")
    assert abs(trace_norm(s, "-1/2,curl") - np.sqrt(np.sqrt(2) * 3)) < 1e-15
    with pytest.raises(ValueError):
        trace_norm(s, "bogus")


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 15), st.integers(0, 2 ** 31 - 1), st.floats(0, 2))
def test_duality_inequality(L, seed, decay):
    rng = np.random.default_rng(seed)
    u = TangentialSpectrum.random(L, rng, decay)
    v = TangentialSpectrum.random(L, rng, decay)
    assert abs(u.l2_inner(v)) <= trace_norm(u, "-1/2,curl") * trace_norm(v, "-1/2,div") * (1 + 1e-12)


def test_spectrum_csv_round_trip(tmp_path):
    s = TangentialSpectrum.random(4, np.random.default_rng(0))
    write_spectrum_csv(s, tmp_path / "s.csv")
    t = read_spectrum_csv(tmp_path / "s.csv")
    assert np.array_equal(t.v, s.v) and np.array_equal(t.V, s.V)
    assert open(tmp_path / "s.csv").readline().strip() == "ell,m,re_v,im_v,re_V,im_V"
