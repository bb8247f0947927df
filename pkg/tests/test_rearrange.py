"""Joint decreasing rearrangement: norm additivity, energy monotonicity,
power commutation and the cross-term inequality."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nls_normsolve.radial import (
    Profile,
    RadialGrid,
    ball_volume,
    gaussian_profile,
    grad_norm_sq,
)
from nls_normsolve.rearrange import (
    cross_term_inequality_check,
    decreasing_rearrangement,
    shibata,
    shibata_power_identity_check,
)


def mixture(grid, rng, bumps=3):
    v = np.zeros(grid.n)
    for _ in range(bumps):
        v += rng.uniform(0.2, 2.0) * np.exp(
            -((grid.r - rng.uniform(0.0, 4.0)) ** 2) / (2 * rng.uniform(0.5, 3.0) ** 2)
        )
    v[-1] = 0.0
    return Profile(grid, v)


def test_zero_partner_collapses_to_schwarz():
    g = RadialGrid(3, 12.0, 1024)
    u = gaussian_profile(g, 1.0, 1.5)
    w = shibata(u, Profile(g, np.zeros(g.n)))
    expect = np.interp(w.grid.r, g.r, u.values, right=0.0)
    assert np.max(np.abs(w.values - expect)) <= 1e-10


def test_plateau_measure_doubles():
    g = RadialGrid(3, 12.0, 2048)
    R = 4.0
    vals = np.where(g.r <= R, 1.0, 0.0)
    vals[-1] = 0.0
    pl = Profile(g, vals)
    w = shibata(pl, pl)
    # super-level set at half height is a ball of doubled measure
    meas = w.grid.integrate((w.values > 0.5).astype(float))
    assert meas == pytest.approx(2.0 * ball_volume(3, R), rel=5e-3)
    crossing = w.grid.r[np.argmax(w.values < 0.5)]
    assert abs(crossing - 2.0 ** (1.0 / 3.0) * R) <= 3.0 * w.grid.h


@pytest.mark.parametrize("p", [2.0, 2.5, 4.0])
def test_norm_additivity(p):
    rng = np.random.default_rng(17)
    for _ in range(15):
        N = int(rng.integers(1, 4))
        g = RadialGrid(N, 12.0, 1024)
        u, v = mixture(g, rng), mixture(g, rng)
        w = shibata(u, v)
        lhs = w.grid.integrate(w.values**p)
        rhs = g.integrate(u.values**p) + g.integrate(v.values**p)
        assert lhs == pytest.approx(rhs, rel=1e-4)


def test_gradient_subadditive_with_strict_margin():
    g = RadialGrid(3, 14.0, 2048)
    u = gaussian_profile(g, 1.0, 1.0)
    v = gaussian_profile(g, 0.8, 2.0)
    w = shibata(u, v)
    total = grad_norm_sq(u) + grad_norm_sq(v)
    slack = total - grad_norm_sq(w)
    assert slack > 1e-5 * total  # strict on smooth positive decreasing pairs


def test_output_nonincreasing_and_idempotent():
    rng = np.random.default_rng(4)
    g = RadialGrid(2, 12.0, 1024)
    u, v = mixture(g, rng), mixture(g, rng)
    w = shibata(u, v)
    assert np.all(np.diff(w.values) <= 1e-12 * np.max(w.values))
    z = Profile(w.grid, np.zeros(w.grid.n))
    again = shibata(w, z, out_grid=w.grid)
    assert np.max(np.abs(again.values - w.values)) <= 1e-8 * max(1.0, np.max(w.values))


def test_decreasing_rearrangement_preserves_masses():
    rng = np.random.default_rng(9)
    g = RadialGrid(3, 12.0, 2048)
    raw = mixture(g, rng)
    raw.values[100:200] *= 0.1  # break monotonicity
    dr = decreasing_rearrangement(raw)
    assert np.all(np.diff(dr.values) <= 1e-12)
    for p in (2.0, 3.0):
        assert g.integrate(dr.values**p) == pytest.approx(g.integrate(raw.values**p), rel=2e-3)


def test_negative_inputs_rejected():
    g = RadialGrid(3, 10.0, 256)
    u = gaussian_profile(g)
    bad = Profile(g, -u.values)
    with pytest.raises(ValueError):
        shibata(u, bad)


def test_dimension_mismatch_rejected():
    u = gaussian_profile(RadialGrid(3, 10.0, 256))
    v = gaussian_profile(RadialGrid(2, 10.0, 256))
    with pytest.raises(ValueError):
        shibata(u, v)


# -- power identity -------------------------------------------------------------

def test_power_identity_trivial_at_one():
    g = RadialGrid(3, 12.0, 512)
    rep = shibata_power_identity_check(gaussian_profile(g), gaussian_profile(g, 0.7, 2.0), 1.0)
    assert rep["relative_deviation"] <= 1e-10


def test_power_identity_random():
    rng = np.random.default_rng(23)
    g = RadialGrid(3, 12.0, 1024)
    rep = shibata_power_identity_check(mixture(g, rng), mixture(g, rng), 2.5)
    assert rep["relative_deviation"] <= 1e-4


def test_power_identity_plateaus():
    g = RadialGrid(3, 12.0, 2048)
    vals = np.where(g.r <= 3.0, 2.0, np.where(g.r <= 6.0, 1.0, 0.0))
    vals[-1] = 0.0
    u = Profile(g, vals)
    v = Profile(g, 0.5 * vals)
    rep = shibata_power_identity_check(u, v, 2.0)
    # piecewise-constant levels land on exact ball radii
    assert rep["relative_deviation"] <= 1e-6


# -- cross-term inequality ---------------------------------------------------------

def test_cross_term_equality_for_schwarz_with_zero_partner():
    g = RadialGrid(3, 12.0, 2048)
    u1 = gaussian_profile(g, 1.0, 1.2)
    u2 = gaussian_profile(g, 0.9, 1.7)
    z = Profile(g, np.zeros(g.n))
    rep = cross_term_inequality_check(u1, u2, z, z, 1.7, 2.1)
    assert rep["slack"] >= -1e-6
    assert abs(rep["slack"]) <= 1e-4 * max(1.0, rep["lhs"])


@given(seed=st.integers(min_value=0, max_value=10_000))
@settings(max_examples=60, deadline=None)
def test_cross_term_inequality_random(seed):
    rng = np.random.default_rng(seed)
    N = int(rng.integers(1, 4))
    g = RadialGrid(N, 12.0, 512)
    u1, u2, v1, v2 = (mixture(g, rng) for _ in range(4))
    r1 = float(rng.uniform(1.1, 2.5))
    r2 = float(rng.uniform(1.1, 2.5))
    rep = cross_term_inequality_check(u1, u2, v1, v2, r1, r2)
    assert rep["slack"] >= -1e-6 * max(1.0, rep["lhs"])


def test_cross_term_disjoint_supports_strict():
    g = RadialGrid(3, 20.0, 2048)
    inner = np.exp(-(g.r**2))
    outer = np.exp(-((g.r - 10.0) ** 2))
    inner[-1] = outer[-1] = 0.0
    u1 = u2 = Profile(g, inner)
    v1 = v2 = Profile(g, outer)
    rep = cross_term_inequality_check(u1, u2, v1, v2, 1.5, 1.5)
    assert rep["slack"] > 1e-3 * rep["lhs"]
