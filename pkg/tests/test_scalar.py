"""Scalar soliton oracle: ground states, scalings, levels and sharp constants."""

import numpy as np
import pytest

from nls_normsolve.radial import dilate_profile
from nls_normsolve.scalar import (
    dilation_energy,
    gaussian_gn_quotient,
    ground_state,
    level,
    scalar_energy,
    scaled_soliton,
    sech_seed,
    sharp_gn_constant,
    solve_ground_state,
)

# closed-form 1D constants: w0 = ((p/2) sech^2((p-2)x/2))^{1/(p-2)}
SECH_CONSTANTS = {
    3: (1.2, 6.0, 7.2),
    4: (4.0 / 3.0, 4.0, 16.0 / 3.0),
    5: (1.36157044391, 3.17699770221, 4.53856814602),
}
SHARP_C14 = 0.8716855428717357


@pytest.mark.parametrize("p", [3.0, 4.0, 5.0])
def test_ground_state_matches_1d_soliton(p):
    gs = ground_state(1, p)
    exact = sech_seed(gs.w0.grid, p)
    assert np.max(np.abs(gs.w0.values - exact)) <= 1e-6
    C0, M0, C1 = SECH_CONSTANTS[int(p)]
    assert gs.C0 == pytest.approx(C0, rel=1e-5)
    assert gs.M0 == pytest.approx(M0, rel=1e-5)
    assert gs.C1 == pytest.approx(C1, rel=1e-5)


@pytest.mark.parametrize("N,p", [(1, 4.0), (2, 3.0), (3, 2.5), (3, 4.0), (4, 3.1)])
def test_ground_state_identities(N, p):
    gs = ground_state(N, p)
    # Nehari and the dilation (Pohozaev) ratio
    assert gs.C0 + gs.M0 == pytest.approx(gs.C1, rel=1e-5)
    assert gs.C0 / gs.C1 == pytest.approx(N * (p - 2.0) / (2.0 * p), rel=1e-5)
    assert np.min(gs.w0.values[:-1]) > 0
    assert np.all(np.diff(gs.w0.values[:-1]) <= 1e-12 * np.max(gs.w0.values))
    assert gs.residual <= 1e-8


def test_ground_state_rejects_bad_exponents():
    with pytest.raises(ValueError):
        solve_ground_state(3, 2.0)
    with pytest.raises(ValueError):
        solve_ground_state(3, 6.0)


def test_uniqueness_surrogate_multistart():
    rng = np.random.default_rng(5)
    base = solve_ground_state(3, 3.0, r_max=20.0, n_points=4096)
    for _ in range(5):
        seed = sech_seed(base.w0.grid, 3.0) * rng.uniform(0.5, 2.0)
        seed *= np.exp(-base.w0.grid.r / rng.uniform(5.0, 30.0))
        alt = solve_ground_state(3, 3.0, r_max=20.0, n_points=4096, seed_values=seed)
        assert np.max(np.abs(alt.w0.values - base.w0.values)) <= 1e-6


# -- scaled solitons ------------------------------------------------------------

def test_scaled_soliton_identity_scaling():
    # a = M0 forces kappa = 1 at mu = 1: the soliton is w0 itself
    gs = ground_state(3, 4.0)
    sol = scaled_soliton(gs.M0, 1.0, 4.0, 3)
    assert sol.lam == pytest.approx(-1.0, rel=1e-12)
    assert sol.grad_sq == pytest.approx(gs.C0, rel=1e-12)
    assert sol.lp_norm_p == pytest.approx(gs.C1, rel=1e-12)


def test_scaled_soliton_quadrature_consistency():
    sol = scaled_soliton(2.5, 1.7, 4.0, 3)
    g = sol.profile.grid
    assert g.mass_values(sol.profile.values) == pytest.approx(2.5, rel=1e-8)
    assert g.grad_sq_values(sol.profile.values) == pytest.approx(sol.grad_sq, rel=1e-4)
    assert g.integrate(np.abs(sol.profile.values) ** 4.0) == pytest.approx(sol.lp_norm_p, rel=1e-4)


def test_scaled_soliton_mu_doubling_exponent():
    # grad_sq scales as mu^{4/(4-N(p-2))}
    N, p, a = 3, 4.0, 1.3
    s1 = scaled_soliton(a, 1.0, p, N)
    s2 = scaled_soliton(a, 2.0, p, N)
    assert s2.grad_sq / s1.grad_sq == pytest.approx(2.0 ** (4.0 / (4.0 - N * (p - 2.0))), rel=1e-12)


def test_scaled_soliton_rejects_subcritical_branch():
    with pytest.raises(ValueError):
        scaled_soliton(1.0, 1.0, 3.0, 3)  # p <= 2+4/3
    with pytest.raises(ValueError):
        scaled_soliton(-1.0, 1.0, 4.0, 3)


# -- level ------------------------------------------------------------------------

def test_level_matches_energy_quadrature():
    sol = scaled_soliton(1.0, 1.0, 4.0, 3)
    l = level(3, 1.0, 1.0, 4.0)
    assert scalar_energy(sol.profile, 1.0, 4.0) == pytest.approx(l, rel=1e-4)


def test_level_monotone_decreasing_in_mu():
    ls = [level(3, 1.0, mu, 4.0) for mu in np.linspace(0.5, 3.0, 9)]
    assert all(a > b for a, b in zip(ls, ls[1:]))


def test_level_mass_homogeneity():
    # l(a) ~ a^{(2p - N(p-2))/(4 - N(p-2))}
    N, p, mu = 3, 4.0, 1.3
    e = (2 * p - N * (p - 2.0)) / (4.0 - N * (p - 2.0))
    assert level(N, 2.0, mu, p) / level(N, 1.0, mu, p) == pytest.approx(2.0**e, rel=1e-12)


# -- dilation energies --------------------------------------------------------------

def test_dilation_energy_at_zero_is_plain():
    gs = ground_state(3, 4.0)
    val, _ = dilation_energy(gs.w0, 1.3, 4.0, 0.0)
    assert val == pytest.approx(scalar_energy(gs.w0, 1.3, 4.0), rel=1e-13)


def test_dilation_energy_sign_pattern_at_soliton():
    sol = scaled_soliton(1.0, 1.0, 4.0, 3)
    _, d0 = dilation_energy(sol.profile, 1.0, 4.0, 0.0)
    _, dm = dilation_energy(sol.profile, 1.0, 4.0, -0.7)
    _, dp = dilation_energy(sol.profile, 1.0, 4.0, +0.7)
    scale = abs(dilation_energy(sol.profile, 1.0, 4.0, 0.0)[0]) + 1.0
    assert abs(d0) <= 1e-4 * scale
    assert dm > 0 > dp


def test_dilation_energy_matches_grid_dilation():
    gs = ground_state(3, 4.0)
    s = 0.4
    val, _ = dilation_energy(gs.w0, 1.0, 4.0, s)
    direct = scalar_energy(dilate_profile(gs.w0, float(np.exp(s))), 1.0, 4.0)
    assert direct == pytest.approx(val, rel=1e-4)


# -- sharp constants -----------------------------------------------------------------

def test_sharp_constant_norm_identity_at_p2():
    assert sharp_gn_constant(3, 2.0) == 1.0


def test_sharp_constant_1d_closed_form():
    assert sharp_gn_constant(1, 4.0) == pytest.approx(SHARP_C14, rel=1e-5)


@pytest.mark.parametrize("N,p", [(1, 3.0), (1, 5.5), (2, 2.7), (2, 4.5), (3, 2.3), (3, 5.0), (4, 2.6), (4, 3.5)])
def test_gaussian_quotient_below_sharp(N, p):
    assert gaussian_gn_quotient(N, p) <= sharp_gn_constant(N, p) * (1 + 1e-10)
