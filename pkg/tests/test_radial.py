"""Grid calculus: quadrature, gradient, Laplacian and dilation contracts."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nls_normsolve.radial import (
    Profile,
    RadialGrid,
    TruncationWarning,
    apply_laplacian,
    ball_volume,
    dilate_profile,
    gaussian_profile,
    grad_norm_sq,
    lp_norm_pow,
    mass,
    mixed_term,
    sphere_area,
)

PI32 = 5.568327996831708        # int_{R^3} e^{-r^2}
GRAD_PI32 = 8.352491995247561   # int_{R^3} |grad e^{-r^2/2}|^2
SQRT_PI_2 = 1.2533141373155001  # int_R e^{-2x^2}


def random_dirichlet(grid, rng, modes=40):
    x = rng.standard_normal(grid.n)
    X = np.fft.rfft(x)
    X[modes:] = 0
    v = np.fft.irfft(X, grid.n)
    v[-1] = 0.0
    return Profile(grid, v)


# -- construction ------------------------------------------------------------

@pytest.mark.parametrize("N", [1, 2, 3, 4, 5])
def test_volume_identity(N):
    g = RadialGrid(N, 9.0, 777)
    vol = ball_volume(N, 9.0)
    assert abs(g.integrate(np.ones(g.n)) - vol) <= 1e-10 * vol
    assert np.all(np.diff(g.r) > 0)
    assert np.all(g.W >= 0)


def test_minimum_resolution_enforced():
    with pytest.raises(ValueError):
        RadialGrid(3, 10.0, 32)
    with pytest.raises(ValueError):
        RadialGrid(0, 10.0, 128)
    with pytest.raises(ValueError):
        RadialGrid(3, -1.0, 128)


def test_line_convention_doubles():
    assert sphere_area(1) == 2.0


# -- mass --------------------------------------------------------------------

def test_mass_zero():
    g = RadialGrid(3, 10.0, 256)
    assert mass(Profile(g, np.zeros(g.n))) == 0.0


def test_mass_gaussian_oracle():
    g = RadialGrid(3, 12.0, 8192)
    u = gaussian_profile(g)
    assert abs(mass(u) - PI32) <= 1e-6 * PI32


@given(c=st.floats(min_value=-3.0, max_value=3.0, allow_nan=False))
@settings(max_examples=25, deadline=None)
def test_mass_quadratic_homogeneity(c):
    g = RadialGrid(2, 8.0, 256)
    u = gaussian_profile(g)
    scaled = Profile(g, c * u.values)
    assert abs(mass(scaled) - c**2 * mass(u)) <= 1e-12 * max(1.0, mass(u))


# -- gradient norm -----------------------------------------------------------

def test_grad_zero():
    g = RadialGrid(3, 10.0, 256)
    assert grad_norm_sq(Profile(g, np.zeros(g.n))) == 0.0


def test_grad_gaussian_oracle():
    g = RadialGrid(3, 12.0, 2048)
    u = gaussian_profile(g)
    assert abs(grad_norm_sq(u) - GRAD_PI32) <= 1e-4 * GRAD_PI32


def test_grad_refinement_second_order():
    errs = []
    for n in (512, 1024, 2048):
        g = RadialGrid(3, 12.0, n)
        errs.append(abs(grad_norm_sq(gaussian_profile(g)) - GRAD_PI32))
    order = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(order > 1.9) and np.all(order < 2.6)


def test_quadrature_order_on_boundary_heavy_integrand():
    # cos r has nonvanishing boundary derivative, exposing the h^2 term
    from scipy.integrate import quad

    exact = sphere_area(2) * quad(lambda r: np.cos(r) * r, 0.0, 10.0)[0]
    errs = []
    for n in (512, 1024, 2048):
        g = RadialGrid(2, 10.0, n)
        errs.append(abs(g.integrate(np.cos(g.r)) - exact))
    order = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all((order > 1.9) & (order < 2.1))


# -- L^p and the coupling integral --------------------------------------------

def test_mixed_term_gaussians_oracle():
    g = RadialGrid(1, 12.0, 2048)
    u = gaussian_profile(g)
    assert abs(mixed_term(u, u, 2.0, 2.0) - SQRT_PI_2) <= 1e-6 * SQRT_PI_2


def test_mixed_term_zero_and_symmetry():
    g = RadialGrid(3, 10.0, 512)
    rng = np.random.default_rng(0)
    u = random_dirichlet(g, rng)
    v = random_dirichlet(g, rng)
    zero = Profile(g, np.zeros(g.n))
    assert mixed_term(u, zero, 1.5, 2.5) == 0.0
    assert mixed_term(u, v, 1.5, 2.5) == pytest.approx(mixed_term(v, u, 2.5, 1.5), rel=1e-14)


def test_lp_norm_rejects_bad_exponent():
    g = RadialGrid(3, 10.0, 256)
    with pytest.raises(ValueError):
        lp_norm_pow(gaussian_profile(g), 0.5)


# -- Laplacian ----------------------------------------------------------------

def test_laplacian_quadratic_exact():
    g = RadialGrid(3, 10.0, 2048)
    u = Profile(g, g.r**2 - g.r_max**2)
    L = apply_laplacian(u)
    assert np.max(np.abs(L.values[:-1] - 6.0)) <= 1e-8


def test_laplacian_linearity():
    g = RadialGrid(2, 10.0, 512)
    rng = np.random.default_rng(1)
    u, v = random_dirichlet(g, rng), random_dirichlet(g, rng)
    lhs = apply_laplacian(Profile(g, 2.0 * u.values - 0.5 * v.values)).values
    rhs = 2.0 * apply_laplacian(u).values - 0.5 * apply_laplacian(v).values
    assert np.max(np.abs(lhs - rhs)) <= 1e-10 * max(1.0, np.max(np.abs(rhs)))


@pytest.mark.parametrize("N", [1, 2, 3, 4])
def test_laplacian_symmetry_and_sbp(N):
    g = RadialGrid(N, 12.0, 1024)
    rng = np.random.default_rng(N)
    for _ in range(5):
        u, v = random_dirichlet(g, rng), random_dirichlet(g, rng)
        Lu = apply_laplacian(u).values
        Lv = apply_laplacian(v).values
        nrm = np.sqrt(mass(u)) * np.sqrt(mass(v))
        assert abs(g.inner(Lu, v.values) - g.inner(Lv, u.values)) <= 1e-8 * nrm
        assert abs(-g.inner(Lu, u.values) - grad_norm_sq(u)) <= 1e-8 * grad_norm_sq(u)


# -- dilation -----------------------------------------------------------------

def test_dilate_identity_node_exact():
    g = RadialGrid(3, 12.0, 1024)
    u = gaussian_profile(g)
    assert np.array_equal(dilate_profile(u, 1.0).values, u.values)


@pytest.mark.parametrize("t", [0.8, 1.3, 2.4])
def test_dilate_mass_preserved(t):
    g = RadialGrid(3, 24.0, 4096)
    u = gaussian_profile(g)
    ut = dilate_profile(u, t)
    assert abs(mass(ut) - mass(u)) <= 1e-6 * mass(u)


@pytest.mark.parametrize("t", [0.8, 1.5])
def test_dilate_gradient_scaling(t):
    g = RadialGrid(3, 24.0, 4096)
    u = gaussian_profile(g)
    assert grad_norm_sq(dilate_profile(u, t)) == pytest.approx(t**2 * grad_norm_sq(u), rel=1e-4)


@pytest.mark.parametrize("p", [2.5, 4.0])
def test_dilate_lp_scaling(p):
    # ||u^t||_p^p = t^{(p/2-1) N} ||u||_p^p
    g = RadialGrid(3, 24.0, 4096)
    u = gaussian_profile(g)
    t = 1.7
    expect = t ** ((p / 2.0 - 1.0) * 3) * lp_norm_pow(u, p)
    assert lp_norm_pow(dilate_profile(u, t), p) == pytest.approx(expect, rel=1e-4)


def test_dilate_warns_on_truncation():
    g = RadialGrid(3, 12.0, 512)
    u = gaussian_profile(g, width=2.0)
    with pytest.warns(TruncationWarning):
        dilate_profile(u, 0.05)
