import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from maxwell_dtn.freqsplit import VolumeVshField
from maxwell_dtn.harmonics import (ScalarSpectrum, TangentialSpectrum, mode_index, nmodes,
                                   sph_harmonics_all, vsh_all)
from maxwell_dtn.potentials import (InteriorMode, SourceSpec, VolumeSourceField, _newton_at,
                                    greens_helmholtz, manufactured_interior_mode,
                                    manufactured_volume_source, maxwell_single_layer,
                                    newton_potential, single_layer_helmholtz,
                                    single_layer_quadrature, spectral_form)


def _ball_points(n, rmax, seed, rmin=0.0):
    rng = np.random.default_rng(seed)
    d = rng.standard_normal((n, 3))
    d /= np.linalg.norm(d, axis=1)[:, None]
    return d * rng.uniform(rmin, rmax, n)[:, None]


def _laplacian4(f, x, h):
    """Fourth-order central Laplacian of a vector-valued f at one point."""
    c = (-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12)
    out = 0
    for e in np.eye(3):
        pts = np.array([x + s * h * e for s in (-2, -1, 0, 1, 2)])
        out = out + np.tensordot(c, f(pts), axes=(0, 0))
    return out / h ** 2


# ---------------------------------------------------------------- Green's function

def test_greens_formula_and_limits():
    x, y = np.array([0.3, 0.1, -0.2]), np.array([-0.1, 0.4, 0.5])
    r = np.linalg.norm(x - y)
    assert abs(abs(greens_helmholtz(3.0, x, y)) - 1 / (4 * np.pi * r)) < 1e-15
    assert abs(greens_helmholtz(1e-9, x, y) - 1 / (4 * np.pi * r)) < 1e-9
    assert greens_helmholtz(2.0, x, y) == greens_helmholtz(2.0, y, x)
    assert abs(greens_helmholtz(-2.0, x, y) - np.conj(greens_helmholtz(2.0, x, y))) < 1e-16
    with pytest.raises(ValueError):
        greens_helmholtz(1.0, x, x)


def test_greens_helmholtz_residual_fd():
    k, y = 2.5, np.zeros(3)
    g = lambda p: greens_helmholtz(k, p, y)
    for x in _ball_points(5, 0.9, 0, rmin=0.3):
        res = -_laplacian4(g, x, 1e-3) - k * k * g(x[None])[0]
        assert abs(res) <= 1e-6 * abs(k * k * g(x[None])[0])


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 20), st.integers(0, 2 ** 20))
def test_greens_reciprocity(k, seed):
    x, y = _ball_points(2, 1.0, seed)
    if np.linalg.norm(x - y) > 1e-6:
        assert greens_helmholtz(k, x, y) == greens_helmholtz(k, y, x)


# ---------------------------------------------------------------- single layers

def test_single_layer_y00_at_origin():
    k = 1.7
    dens = ScalarSpectrum(0, np.array([1.0 + 0j]))
    val = single_layer_helmholtz(k, dens, np.zeros((1, 3)))[0]
    assert abs(val - np.exp(1j * k) / np.sqrt(4 * np.pi)) < 1e-14


def test_single_layer_zero_density():
    x = _ball_points(4, 0.9, 1)
    assert np.all(single_layer_helmholtz(2.0, ScalarSpectrum(5, np.zeros(nmodes(5), complex)), x) == 0)


def test_single_layer_interior_only():
    with pytest.raises(ValueError):
        single_layer_helmholtz(1.0, ScalarSpectrum(1, np.ones(nmodes(1), complex)), [[0, 0, 1.0]])


def test_single_layer_against_quadrature():
    L, k = 5, 3.0
    rng = np.random.default_rng(2)
    c = rng.standard_normal(nmodes(L)) + 1j * rng.standard_normal(nmodes(L))
    x = _ball_points(20, 0.95, 3)
    mode = single_layer_helmholtz(k, ScalarSpectrum(L, c), x)
    quad = single_layer_quadrature(k, lambda p: sph_harmonics_all(L, p) @ c, x)
    assert np.max(abs(mode - quad)) <= 1e-8 * np.max(abs(quad))


def test_maxwell_single_layer_curl_part_is_componentwise():
    L, k = 4, 2.0
    rng = np.random.default_rng(4)
    v = rng.standard_normal(nmodes(L)) + 1j * rng.standard_normal(nmodes(L))
    v[0] = 0
    dens = TangentialSpectrum(L, v, np.zeros(nmodes(L), complex))
    x = _ball_points(6, 0.9, 5, rmin=0.1)
    quad = single_layer_quadrature(k, lambda p: np.einsum("qja,j->qa", vsh_all(L, p)[2], v), x)
    assert np.max(abs(maxwell_single_layer(k, dens, x) - quad)) <= 1e-8 * np.max(abs(quad))


def test_maxwell_single_layer_full_against_quadrature():
    # the grad part through the surface divergence, checked against the kernel
    L, k = 4, 2.0
    dens = TangentialSpectrum.random(L, np.random.default_rng(6))
    x = _ball_points(4, 0.8, 7, rmin=0.2)
    h = 1e-4

    def direct(p):
        Y, G, T = vsh_all(L, p)
        return np.einsum("qja,j->qa", T, dens.v) + np.einsum("qja,j->qa", G, dens.V)

    lam = np.array([l * (l + 1.0) for l in range(L + 1) for _ in range(2 * l + 1)])
    div = lambda p: sph_harmonics_all(L, p) @ (-lam * dens.V)
    s0 = single_layer_quadrature(k, direct, x)
    grad = np.stack([(single_layer_quadrature(k, div, x + h * e) - single_layer_quadrature(k, div, x - h * e))
                     / (2 * h) for e in np.eye(3)], 1)
    ref = s0 + grad / k ** 2
    assert np.max(abs(maxwell_single_layer(k, dens, x) - ref)) <= 1e-6 * np.max(abs(ref))


def test_maxwell_single_layer_pde_residual():
    L, k = 4, 2.0
    dens = TangentialSpectrum.random(L, np.random.default_rng(8))
    f = lambda p: maxwell_single_layer(k, dens, p)
    h = 1e-3
    for x in _ball_points(5, 0.8, 9, rmin=0.2):
        H = np.zeros((3, 3, 3), complex)        # d_a d_b E_c by differences
        for a, ea in enumerate(np.eye(3)):
            for b, eb in enumerate(np.eye(3)):
                H[a, b] = (f(x + h * ea + h * eb) - f(x + h * ea - h * eb)
                           - f(x - h * ea + h * eb) + f(x - h * ea - h * eb))[0] / (4 * h * h)
        grad_div = np.array([sum(H[a, c, c] for c in range(3)) for a in range(3)])
        lap = sum(H[c, c] for c in range(3))
        E = f(x[None])[0]
        res = grad_div - lap - k * k * E
        assert np.max(abs(res)) <= 1e-4 * k * k * np.max(abs(E))


def test_maxwell_single_layer_linearity():
    L, k = 3, 1.5
    rng = np.random.default_rng(10)
    a, b = TangentialSpectrum.random(L, rng), TangentialSpectrum.random(L, rng)
    x = _ball_points(5, 0.9, 11, rmin=0.1)
    s = TangentialSpectrum(L, 2 * a.v - 1j * b.v, 2 * a.V - 1j * b.V)
    lhs = maxwell_single_layer(k, s, x)
    rhs = 2 * maxwell_single_layer(k, a, x) - 1j * maxwell_single_layer(k, b, x)
    assert np.max(abs(lhs - rhs)) < 1e-12 * np.max(abs(lhs))


# ---------------------------------------------------------------- Newton potential

def _bump_source(center, radius=0.25):
    center = np.asarray(center, float)

    def func(x):
        d = np.linalg.norm(x - center, axis=1) / radius
        w = np.where(d < 1, (1 - np.minimum(d, 1) ** 2) ** 8, 0.0)
        return w[:, None] * np.array([1.0, -0.5, 0.25])
    return SourceSpec(kind="callable", a=0.0, b=0.95, func=func)


def test_newton_zero_source():
    src = SourceSpec(kind="callable", a=0.0, b=0.9, func=lambda x: np.zeros((len(x), 3)))
    assert np.all(newton_potential(2.0, src, np.array([[0.1, 0.2, 0.3]])) == 0)


def test_newton_translation_equivariance():
    k, d = 2.0, np.array([0.0, 0.2, -0.1])
    x = np.array([[0.15, 0.05, 0.1], [0.5, -0.2, 0.3]])
    a = newton_potential(k, _bump_source([0.1, -0.1, 0.0]), x)
    b = newton_potential(k, _bump_source(np.array([0.1, -0.1, 0.0]) + d), x + d)
    assert np.max(abs(a - b)) <= 1e-8 * np.max(abs(a))


def test_newton_helmholtz_residual_fd():
    # fixed quadrature order so the quadrature error is smooth in x
    k, src = 2.0, _bump_source([0.1, 0.0, 0.0])
    f = lambda p: np.array([_newton_at(k, src, pi, 64) for pi in p])
    x = np.array([0.15, 0.05, -0.05])
    N = f(x[None])[0]
    res = -_laplacian4(f, x, 1e-2) - k * k * N - src(x[None])[0]
    assert np.max(abs(res)) <= 1e-4 * np.max(abs(src(x[None])[0]))


def test_newton_matches_mode_formula():
    k = 2.0
    src = SourceSpec(ell=1, m=0, a=0.1, b=0.8)
    vs = VolumeSourceField(k, src)
    x = np.array([[0.3, 0.2, 0.1], [0.1, -0.5, 0.6]])
    E = vs(x)[0]
    assert np.max(abs(E - 1j * k * newton_potential(k, src, x))) <= 1e-8 * np.max(abs(E))


# ---------------------------------------------------------------- manufactured fields

@pytest.mark.parametrize("pol", ["TE", "TM"])
def test_interior_mode_pde_residual(pol):
    k = 2.0
    ex = InteriorMode(2, 1, k, pol)
    x = _ball_points(50, 0.95, 12, rmin=0.05)
    scale = k * k * np.max(np.linalg.norm(ex(x)[0], axis=1))
    assert np.max(ex.curl_curl_residual(x, k)) <= 1e-6 * scale


@pytest.mark.parametrize("pol", ["TE", "TM"])
def test_mode_functional_consistency(pol):
    # A_k(E, v) = G(v) for spectral test fields v
    k = 2.0
    mm = manufactured_interior_mode(1, 0, k, pol, L_max=3)
    rng = np.random.default_rng(13)
    for _ in range(5):
        v = VolumeVshField.random(3, 32, rng, degree=6)
        a, g = spectral_form(mm.field, v, k), mm.functional(v)
        assert abs(a - g) <= 1e-8 * max(abs(g), 1.0)


def test_te_mode_trace_is_pure_curl():
    mm = manufactured_interior_mode(1, 0, 2.0, "TE", L_max=4)
    tr = mm.field.tangential_trace()
    i = mode_index(1, 0)
    assert np.max(abs(np.delete(tr.v, i))) < 1e-12 and np.max(abs(tr.V)) < 1e-12
    assert abs(tr.v[i]) > 0.1
    assert np.max(abs(np.delete(mm.boundary.v, i))) == 0 and np.all(mm.boundary.V == 0)


def test_mode_validation():
    with pytest.raises(ValueError):
        InteriorMode(0, 0, 1.0, "TE")
    with pytest.raises(ValueError):
        InteriorMode(1, 0, 1.0, "XX")


def test_source_spec_validation_and_divergence():
    with pytest.raises(ValueError):
        SourceSpec(a=0.5, b=0.4)
    with pytest.raises(ValueError):
        SourceSpec(ell=2, m=3)
    src = SourceSpec(ell=2, m=1, a=0.2, b=0.8)
    h = 1e-5
    x = _ball_points(20, 0.85, 14, rmin=0.15)
    div = sum((src(x + h * e)[:, i] - src(x - h * e)[:, i]) / (2 * h) for i, e in enumerate(np.eye(3)))
    assert np.max(abs(div)) <= 1e-8 * np.max(abs(src(x)))
    far = np.array([[0.0, 0.0, 0.95], [0.05, 0.0, 0.0]])
    assert np.all(src(far) == 0)


def test_volume_source_zero_and_finite():
    vs = manufactured_volume_source(2.0, SourceSpec(amplitude=0.0))
    E, C = vs(_ball_points(5, 1.0, 15))
    assert np.all(E == 0) and np.all(C == 0)
    vs = manufactured_volume_source(2.0, SourceSpec(ell=1, a=0.1, b=0.8))
    E, C = vs(np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 1e-9], [0.0, 0.0, 0.999], [0.6, 0.6, 0.5]]))
    assert np.all(np.isfinite(E)) and np.all(np.isfinite(C))


@pytest.mark.parametrize("ell", [1, 2])
def test_volume_source_pde_residual(ell):
    k = 2.0
    vs = VolumeSourceField(k, SourceSpec(ell=ell, m=0, a=0.1, b=0.8))
    x = _ball_points(30, 0.95, 16, rmin=0.05)
    scale = k * k * np.max(np.linalg.norm(vs(x)[0], axis=1))
    assert np.max(vs.curl_curl_residual(x, k, rhs=vs.load_density())) <= 1e-4 * scale


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2 ** 20))
def test_single_layer_linear_hypothesis(seed):
    L, k = 3, 1.3
    rng = np.random.default_rng(seed)
    a = rng.standard_normal(nmodes(L)) + 0j
    b = rng.standard_normal(nmodes(L)) + 0j
    x = _ball_points(3, 0.9, seed)
    f = lambda c: single_layer_helmholtz(k, ScalarSpectrum(L, c), x)
    assert np.max(abs(f(a + 2 * b) - f(a) - 2 * f(b))) < 1e-12 * max(1.0, np.max(abs(f(a))))
