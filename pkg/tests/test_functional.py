"""Energy, Pohozaev functional, gradient and multiplier diagnostics."""

import numpy as np
import pytest

from nls_normsolve.functional import (
    StatePair,
    energy,
    gradient,
    gradient_values,
    lagrange_multipliers,
    pohozaev,
    residuals,
)
from nls_normsolve.params import Params
from nls_normsolve.radial import Profile, RadialGrid, dilate_profile, gaussian_profile
from nls_normsolve.scalar import scaled_soliton

# high-resolution quadrature oracle: u = v = e^{-x^2/2}, N=1, mu=1, beta=1,
# p1 = p2 = 4 = r1 + r2
J_GAUSS_PAIR = -0.9937442805204925

PARAMS_1D = Params(N=1, p1=4.0, p2=4.0, r1=2.0, r2=2.0, mu1=1.0, mu2=1.0,
                   beta=1.0, a1=1.0, a2=1.0)


def gaussian_pair(n=4096, r_max=16.0, N=1):
    g = RadialGrid(N, r_max, n)
    u = gaussian_profile(g)
    return StatePair(u, u.copy())


def test_energy_zero_state():
    from dataclasses import replace

    g = RadialGrid(3, 10.0, 256)
    z = StatePair(Profile(g, np.zeros(g.n)), Profile(g, np.zeros(g.n)))
    assert energy(z, replace(PARAMS_1D, N=3)) == 0.0


def test_energy_gaussian_pair_oracle():
    state = gaussian_pair(n=8192)
    # the half-line quadrature doubles the even reflection, matching the full-line oracle
    assert energy(state, PARAMS_1D) == pytest.approx(J_GAUSS_PAIR, rel=1e-6)


def test_energy_beta_zero_decouples():
    state = gaussian_pair()
    p0 = PARAMS_1D.with_beta(0.0)
    scalar = Params(N=1, p1=4.0, p2=4.0, r1=2.0, r2=2.0, mu1=1.0, mu2=1.0,
                    beta=0.0, a1=1.0, a2=1.0)
    g = state.grid
    z = Profile(g, np.zeros(g.n))
    e1 = energy(StatePair(state.u1, z), scalar)
    e2 = energy(StatePair(z, state.u2), scalar)
    assert energy(state, p0) == pytest.approx(e1 + e2, rel=1e-13)


def test_mismatched_grids_rejected():
    a = gaussian_profile(RadialGrid(3, 10.0, 256))
    b = gaussian_profile(RadialGrid(3, 12.0, 256))
    with pytest.raises(ValueError):
        StatePair(a, b)


# -- Pohozaev functional -------------------------------------------------------

def test_pohozaev_zero_state():
    g = RadialGrid(1, 10.0, 256)
    z = StatePair(Profile(g, np.zeros(g.n)), Profile(g, np.zeros(g.n)))
    assert pohozaev(z, PARAMS_1D) == 0.0


def test_pohozaev_is_dilation_derivative():
    state = gaussian_pair(n=8192, r_max=24.0)
    h = 1e-3
    up = energy(StatePair(dilate_profile(state.u1, 1 + h), dilate_profile(state.u2, 1 + h)), PARAMS_1D)
    dn = energy(StatePair(dilate_profile(state.u1, 1 - h), dilate_profile(state.u2, 1 - h)), PARAMS_1D)
    fd = (up - dn) / (2 * h)
    assert pohozaev(state, PARAMS_1D) == pytest.approx(fd, rel=5e-4, abs=5e-6)


def test_pohozaev_chain_rule_along_dilation():
    # d/dt J(u^t, v^t) at t0 equals Q(state dilated to t0)/t0
    state = gaussian_pair(n=8192, r_max=24.0)
    t0, h = 1.4, 1e-3
    up = energy(StatePair(dilate_profile(state.u1, t0 + h), dilate_profile(state.u2, t0 + h)), PARAMS_1D)
    dn = energy(StatePair(dilate_profile(state.u1, t0 - h), dilate_profile(state.u2, t0 - h)), PARAMS_1D)
    fd = (up - dn) / (2 * h)
    at_t0 = StatePair(dilate_profile(state.u1, t0), dilate_profile(state.u2, t0))
    assert pohozaev(at_t0, PARAMS_1D) / t0 == pytest.approx(fd, rel=5e-4)


# -- gradient --------------------------------------------------------------------

def test_gradient_zero_state():
    g = RadialGrid(1, 10.0, 256)
    z = StatePair(Profile(g, np.zeros(g.n)), Profile(g, np.zeros(g.n)))
    g1, g2 = gradient_values(z, PARAMS_1D)
    assert np.all(g1 == 0) and np.all(g2 == 0)


def test_gradient_matches_directional_derivative():
    params = Params(N=2, p1=2.7, p2=3.1, r1=1.6, r2=1.8, mu1=1.0, mu2=1.3,
                    beta=0.7, a1=1.0, a2=1.0)
    g = RadialGrid(2, 14.0, 2048)
    state = StatePair(gaussian_profile(g, 1.0, 1.2), gaussian_profile(g, 0.7, 1.9))
    g1, g2 = gradient_values(state, params)
    rng = np.random.default_rng(3)
    eps = 1e-6
    for _ in range(10):
        h1 = np.fft.irfft(np.r_[rng.standard_normal(30), np.zeros(g.n // 2 + 1 - 30)], g.n)
        h2 = np.fft.irfft(np.r_[rng.standard_normal(30), np.zeros(g.n // 2 + 1 - 30)], g.n)
        h1[-1] = h2[-1] = 0.0
        pert = StatePair(Profile(g, state.u1.values + eps * h1), Profile(g, state.u2.values + eps * h2))
        fd = (energy(pert, params) - energy(state, params)) / eps
        inner = g.inner(g1, h1) + g.inner(g2, h2)
        norm_h = np.sqrt(g.mass_values(h1) + g.mass_values(h2))
        assert abs(inner - fd) <= 1e-5 * max(1.0, norm_h)


def test_gradient_beta_zero_decouples():
    params = PARAMS_1D.with_beta(0.0)
    g = RadialGrid(1, 14.0, 1024)
    u2a = gaussian_profile(g, 0.5, 1.0)
    u2b = gaussian_profile(g, 0.5, 2.0)
    u1 = gaussian_profile(g, 1.0, 1.5)
    _, g2a = gradient_values(StatePair(u1, u2a), params)
    _, g2b = gradient_values(StatePair(Profile(g, 2 * u1.values), u2a), params)
    assert np.array_equal(g2a, g2b)
    _, g2c = gradient_values(StatePair(u1, u2b), params)
    assert not np.array_equal(g2a, g2c)


def test_gradient_wrapper_returns_pair():
    state = gaussian_pair(n=256, r_max=10.0)
    gv = gradient(state, PARAMS_1D)
    assert gv.grid == state.grid


# -- multipliers -------------------------------------------------------------------

def test_multiplier_recovers_soliton_frequency():
    # scalar soliton embedded as (w, ~0): the first Rayleigh quotient is lambda
    sol = scaled_soliton(1.0, 1.0, 4.0, 3)
    g = sol.profile.grid
    params = Params(N=3, p1=4.0, p2=4.0, r1=1.4, r2=1.4, mu1=1.0, mu2=1.0,
                    beta=0.0, a1=1.0, a2=1.0)
    state = StatePair(sol.profile, Profile(g, np.zeros(g.n)))
    lam1, lam2, _, _ = residuals(state, params)
    assert lam1 == pytest.approx(sol.lam, rel=1e-4)
    assert lam2 == 0.0


def test_multiplier_scaling_homogeneity():
    # beta = 0: <g(cu), cu>/||cu||^2 = (||grad u||^2 - mu c^{p-2} ||u||_p^p)/||u||^2
    params = PARAMS_1D.with_beta(0.0)
    g = RadialGrid(1, 16.0, 2048)
    u = gaussian_profile(g)
    z = Profile(g, np.zeros(g.n))
    kin = g.grad_sq_values(u.values)
    lp = g.integrate(np.abs(u.values) ** 4)
    m = g.mass_values(u.values)
    for c in (0.5, 1.0, 2.0):
        state = StatePair(Profile(g, c * u.values), gaussian_profile(g, 0.3, 1.0))
        lam1, _ = lagrange_multipliers(state, params)
        expect = (c**2 * kin - c**4 * lp) / (c**2 * m)
        assert lam1 == pytest.approx(expect, rel=1e-12)


def test_multiplier_zero_mass_rejected():
    g = RadialGrid(1, 10.0, 256)
    state = StatePair(gaussian_profile(g), Profile(g, np.zeros(g.n)))
    with pytest.raises(ValueError):
        lagrange_multipliers(state, PARAMS_1D)


# -- converged records (shared fixtures) ---------------------------------------------

def test_record_invariants_h0(h0_local, h0_setup):
    params, consts = h0_setup
    rec = h0_local
    assert rec.pohozaev_residual <= 1e-5
    assert rec.grad_residual <= 1e-5
    assert rec.lambda1 < 0 and rec.lambda2 < 0
    assert rec.lambda1 * params.a1 + rec.lambda2 * params.a2 < 0
    assert np.min(rec.state.u1.values) >= 0 and np.max(rec.state.u1.values) > 0


def test_energy_dilation_polynomial_termwise(h0_local, h0_setup):
    params, _ = h0_setup
    from nls_normsolve.fibering import fibering_curve

    curve = fibering_curve(h0_local.state, params)
    for t in (0.7, 1.0, 1.6):
        direct = energy(
            StatePair(dilate_profile(h0_local.state.u1, t), dilate_profile(h0_local.state.u2, t)),
            params,
        )
        assert direct == pytest.approx(float(curve.theta(t)), rel=2e-4, abs=1e-9)
