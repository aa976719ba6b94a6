import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import spherical_in

from maxwell_dtn.freqsplit import (RadialSolveConfig, VolumeVshField, double_product,
                                   field_h1_norm_quadrature, field_inner_l2,
                                   field_norm_curl_k, filter_gamma, H_Omega, helmholtz_project,
                                   L_Omega, lift_L_Omega, lift_operator_norms, radial_basis,
                                   radial_rule, read_field_csv, stable_split_constant,
                                   v0_residual, vsh_filter_volume, write_field_csv)
from maxwell_dtn.harmonics import TangentialSpectrum, mode_index, sphere_quadrature, trace_norm


def rfield(L=4, N=12, seed=0, degree=6):
    return VolumeVshField.random(L, N, np.random.default_rng(seed), degree=degree)


def quad3d(field, nr=40, Ls=14):
    r, wr = radial_rule(nr)
    q = sphere_quadrature(Ls)
    pts = (r[:, None, None] * q.points[None]).reshape(-1, 3)
    w = (wr[:, None] * r[:, None] ** 2 * q.weights[None]).ravel()
    return pts, w


def test_config():
    with pytest.raises(ValueError):
        RadialSolveConfig(4)


def test_radial_basis_orthonormal():
    r, w = radial_rule(50)
    for s in (0, 2, 7):
        B, dB = radial_basis(16, s, r)
        assert np.max(abs((B.T * (r * r * w)) @ B - np.eye(17))) < 1e-12
        h = 1e-6
        fd = (radial_basis(16, s, r + h)[0] - radial_basis(16, s, r - h)[0]) / (2 * h)
        assert np.max(abs(fd - dB)) < 1e-5 * np.max(abs(dB))


def test_norms_against_3d_quadrature():
    f = rfield()
    pts, w = quad3d(f)
    F, C = f.evaluate(pts)
    assert abs(np.sqrt(np.sum(w * np.sum(abs(F) ** 2, 1))) - f.l2_norm()) < 1e-8 * f.l2_norm()
    assert abs(np.sqrt(np.sum(w * np.sum(abs(C) ** 2, 1))) - f.curl_l2_norm()) < 1e-8 * f.curl_l2_norm()
    k = 3.0
    ref = np.sqrt(np.sum(w * (np.sum(abs(C) ** 2, 1) + k * k * np.sum(abs(F) ** 2, 1))))
    assert abs(field_norm_curl_k(f, k) - ref) < 1e-8 * ref
    assert field_norm_curl_k(VolumeVshField.zeros(3, 10), 2.0) == 0


def test_curl_formula_by_finite_differences():
    f = rfield(seed=5)
    p = np.random.default_rng(1).standard_normal((6, 3))
    p *= (0.3 + 0.6 * np.random.default_rng(2).random(6) / np.linalg.norm(p, axis=1))[:, None]
    _, C = f.evaluate(p)
    h = 1e-4
    J = np.zeros((6, 3, 3), complex)
    for j, e in enumerate(np.eye(3)):
        J[:, :, j] = (f.evaluate(p + h * e, False) - f.evaluate(p - h * e, False)) / (2 * h)
    curl = np.stack([J[:, 2, 1] - J[:, 1, 2], J[:, 0, 2] - J[:, 2, 0], J[:, 1, 0] - J[:, 0, 1]], 1)
    assert np.max(abs(curl - C)) < 1e-6 * np.max(abs(C))


def test_filter_gamma():
    s = TangentialSpectrum.random(8, np.random.default_rng(0))
    lo, hi = filter_gamma(s, 2.0, 2.0, "low"), filter_gamma(s, 2.0, 2.0, "high")
    assert lo.v[mode_index(4, 0)] == s.v[mode_index(4, 0)]  # l = lam k kept
    assert hi.v[mode_index(4, 0)] == 0
    assert np.array_equal(lo.v + hi.v, s.v) and np.array_equal(lo.V + hi.V, s.V)
    assert trace_norm(lo, "-1/2,curl") <= trace_norm(s, "-1/2,curl")


def test_vsh_filter_volume():
    f = rfield()
    f0 = vsh_filter_volume(f, 0)
    assert np.any(f0.coef[0, 0]) and not np.any(f0.coef[:, 1:]) and not np.any(f0.coef[1:, 0])
    lo = vsh_filter_volume(f, 2.5)
    hi = f - lo
    assert lo.l2_norm() <= f.l2_norm() and lo.curl_l2_norm() <= f.curl_l2_norm()
    assert hi.l2_norm() <= f.l2_norm() and hi.curl_l2_norm() <= f.curl_l2_norm()
    assert abs(field_inner_l2(lo, hi)) < 1e-12 * f.l2_norm() ** 2


def modified_bessel_profiles(ell, k, r):
    i, di = spherical_in(ell, k * r), k * spherical_in(ell, k * r, derivative=True)
    den = spherical_in(ell, k) + k * spherical_in(ell, k, derivative=True)
    lam = ell * (ell + 1)
    return lam * i / (r * den), (i + r * di) / (r * den), i / spherical_in(ell, k)


@pytest.mark.parametrize("ell,m", [(1, 0), (3, -2), (5, 4), (8, 1)])
@pytest.mark.parametrize("k", [1.0, 3.0])
def test_lift_matches_closed_form(ell, m, k):
    # curl curl E + k^2 E = 0 has the regular solutions i_l(kr) T and curl(i_l(kr) T)/k
    L = 8
    r = np.linspace(0.05, 1, 25)
    u, v, w = modified_bessel_profiles(ell, k, r)
    i = mode_index(ell, m)
    fg = lift_L_Omega(TangentialSpectrum.single(L, ell, m, "grad"), k).radial(r)
    fc = lift_L_Omega(TangentialSpectrum.single(L, ell, m, "curl"), k).radial(r)
    assert np.max(abs(fg["u"][i] - u)) < 1e-10 * np.max(abs(u))
    assert np.max(abs(fg["v"][i] - v)) < 1e-10 * np.max(abs(v))
    assert np.max(abs(fc["w"][i] - w)) < 1e-10
    assert not np.any(fg["w"]) and not np.any(fc["u"])


def test_lift_self_convergence_and_zero():
    t = TangentialSpectrum.single(6, 4, 2, "grad") + TangentialSpectrum.single(6, 2, 0, "curl")
    a = lift_L_Omega(t, 2.0, RadialSolveConfig(16))
    b = lift_L_Omega(t, 2.0, RadialSolveConfig(32))
    r = np.linspace(0.01, 1, 40)
    da, db = a.radial(r), b.radial(r)
    for c in "uvw":
        assert np.max(abs(da[c] - db[c])) < 1e-8
    z = lift_L_Omega(TangentialSpectrum.zeros(6), 2.0)
    assert not np.any(z.coef)


@pytest.mark.parametrize("k", [1.0, 2.0, 4.0, 8.0])
def test_lift_properties_random(k):
    rng = np.random.default_rng(int(k))
    for _ in range(10):
        f = VolumeVshField.random(10, 16, rng, degree=8)
        Lf = L_Omega(f, k)
        tr = Lf.tangential_trace()
        low = filter_gamma(f.tangential_trace(), k, 2.0, "low")
        assert np.max(abs(tr.v - low.v)) < 1e-9 and np.max(abs(tr.V - low.V)) < 1e-9
        assert Lf.div_l2_norm() < 1e-8 * max(1.0, field_norm_curl_k(f, k))
        a = field_norm_curl_k(f, k)
        assert field_norm_curl_k(Lf, k) <= a + 1e-9
        assert field_norm_curl_k(Lf, k) <= field_norm_curl_k(vsh_filter_volume(f, 2 * k), k) + 1e-9
        assert field_norm_curl_k(H_Omega(f, k), k) <= 2 * a + 1e-9


def test_lift_operator_norms_exact():
    for k in (1.0, 4.0):
        nl, nh = lift_operator_norms(k, int(2 * k) + 2, 16)
        assert nl <= 1 + 1e-9 and nh <= 1 + 1e-9


def test_stable_splitting_flat():
    C = [stable_split_constant(k, int(2 * k) + 4, 16) for k in (1.0, 2.0, 4.0, 8.0)]
    assert max(C) / min(C) <= 2


def test_projection_reproduces_gradients():
    # grad(r^2 Y_1^0): u = 2r, v = r in the ansatz with s = 0 for l = 1
    L, N = 3, 12
    f = VolumeVshField.zeros(L, N)
    r, w = radial_rule(40)
    i = mode_index(1, 0)
    Bu = radial_basis(N, 0, r)[0] * (r * r * w)[:, None]
    f.coef[0, i] = Bu.T @ (2 * r)
    f.coef[1, i] = Bu.T @ r
    assert f.curl_l2_norm() < 1e-10
    for variant in ("forward", "adjoint"):
        g, rem, res = helmholtz_project(f, 2.0, variant)
        assert rem.l2_norm() < 1e-10 and res < 1e-9
    assert abs(field_norm_curl_k(f, 2.0) - 2.0 * f.l2_norm()) < 1e-10


@pytest.mark.parametrize("variant,which", [("forward", "V0"), ("adjoint", "V0star")])
@pytest.mark.parametrize("k", [1.0, 4.0])
def test_projection_remainder_membership(variant, which, k):
    f = rfield(seed=7)
    g, rem, res = helmholtz_project(f, k, variant)
    assert res <= 1e-9
    d, b = v0_residual(rem, k, which)
    assert d <= 1e-7 and b <= 1e-7
    g2, _, _ = helmholtz_project(g, k, variant)
    assert (g2 - g).l2_norm() <= 1e-10 * max(1.0, g.l2_norm())
    # halving the test-space degree does not change the projection of a degree-6 field
    g3, _, _ = helmholtz_project(f, k, variant, N_r=f.N_r // 2 + 2)
    assert (g3 - g).l2_norm() <= 1e-6 * g.l2_norm()


def test_adjoint_equals_forward_at_minus_k():
    f = rfield(seed=3)
    ga, _, _ = helmholtz_project(f, 3.0, "adjoint")
    gf, _, _ = helmholtz_project(f, -3.0, "forward")
    assert (ga - gf).l2_norm() < 1e-12 * ga.l2_norm()


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.floats(1.0, 8.0))
def test_coercivity_on_gradients(seed, k):
    g, _, _ = helmholtz_project(rfield(L=3, N=10, seed=seed), k, "forward")
    val = double_product(g, g, k)
    assert val.real >= k * k * g.l2_norm() ** 2 * (1 - 1e-12)


def test_v0_residual_basic():
    z = VolumeVshField.zeros(3, 10)
    assert v0_residual(z, 2.0) == (0.0, 0.0)
    f = rfield(seed=11)
    _, rem, _ = helmholtz_project(f, 2.0, "forward")
    pert = rfield(seed=12)
    d1, b1 = v0_residual(rem + pert.scaled(1e-3), 2.0)
    d2, b2 = v0_residual(rem + pert.scaled(2e-3), 2.0)
    assert abs(d2 / d1 - 2) < 1e-3 and abs(b2 / b1 - 2) < 1e-3
    with pytest.raises(ValueError):
        v0_residual(z, 2.0, "V1")


@pytest.mark.parametrize("variant,which", [("forward", "V0"), ("adjoint", "V0star")])
def test_v0_h1_inequality(variant, which):
    f = rfield(L=3, N=10, seed=21, degree=4)
    _, rem, _ = helmholtz_project(f, 2.0, variant)
    assert max(v0_residual(rem, 2.0, which)) < 1e-8
    assert field_h1_norm_quadrature(rem) <= field_norm_curl_k(rem, 1.0) * (1 + 1e-6)


def test_field_csv_round_trip(tmp_path):
    f = rfield(L=2, N=8)
    write_field_csv(f, tmp_path / "f.csv")
    g = read_field_csv(tmp_path / "f.csv")
    assert np.array_equal(g.coef, f.coef)
