"""Machine-checkable property suite aggregating every module's invariants.

Each property returns a dict {name, passed, margin, details}; the suite
runner collects them into a JSON report.  ``scale`` controls sample counts
so the default run stays inside a ten-minute single-core budget.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from math import pi, sqrt

import numpy as np

from . import fibering, rearrange
from .descent import SolverOptions, local_minimize
from .functional import StatePair, energy, gradient_values, pohozaev, residuals
from .params import GNData, Params, Regime, classify_regime, compute_thresholds, critical_exponent
from .radial import (
    Profile,
    RadialGrid,
    apply_laplacian,
    ball_volume,
    dilate_profile,
    gaussian_profile,
    grad_norm_sq,
    mass,
)
from .scalar import gaussian_gn_quotient, ground_state, sharp_gn_constant


def max_workers() -> int:
    try:
        return max(1, int(os.environ.get("NLS_NORMSOLVE_THREADS", "1")))
    except ValueError:
        return 1


def _result(name, passed, margin, **details):
    return {"name": name, "passed": bool(passed), "margin": float(margin), "details": details}


# ---------------------------------------------------------------------------
# grid properties
# ---------------------------------------------------------------------------

def prop_quadrature_order(scale: int = 1, seed: int = 0) -> dict:
    """Empirical order of the quadrature on smooth functions with boundary terms."""
    from scipy.integrate import quad

    from .radial import sphere_area

    orders = []
    for N in (1, 2, 3):
        exact_w, _ = quad(lambda r: np.cos(r) * r ** (N - 1), 0.0, 10.0, limit=200)
        exact = sphere_area(N) * exact_w
        errs = []
        for n in (512, 1024, 2048):
            g = RadialGrid(N, 10.0, n)
            errs.append(abs(g.integrate(np.cos(g.r)) - exact))
        e = np.array(errs)
        orders.extend(np.log2(e[:-1] / e[1:]).tolist())
    orders = np.array(orders)
    ok = np.all((orders > 1.9) & (orders < 2.1))
    return _result("grid.quadrature_second_order", ok, float(np.min(np.abs(orders - 2.0))), orders=orders.tolist())


def prop_volume_identity(scale: int = 1, seed: int = 0) -> dict:
    worst = 0.0
    for N in (1, 2, 3, 4):
        g = RadialGrid(N, 7.5, 1024)
        vol = ball_volume(N, 7.5)
        worst = max(worst, abs(g.integrate(np.ones(g.n)) - vol) / vol)
    return _result("grid.volume_identity", worst <= 1e-10, 1e-10 - worst, worst=worst)


def prop_laplacian_identities(scale: int = 1, seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    worst_sym = worst_sbp = 0.0
    for N in (1, 2, 3):
        g = RadialGrid(N, 12.0, 1024)
        for _ in range(5 * scale):
            u = np.cumsum(rng.standard_normal(g.n)) * g.h
            v = np.cumsum(rng.standard_normal(g.n)) * g.h
            u[-1] = v[-1] = 0.0
            pu, pv = Profile(g, u), Profile(g, v)
            Lu = apply_laplacian(pu).values
            Lv = apply_laplacian(pv).values
            nrm = sqrt(g.mass_values(u)) * sqrt(g.mass_values(v))
            worst_sym = max(worst_sym, abs(g.inner(Lu, v) - g.inner(Lv, u)) / nrm)
            worst_sbp = max(
                worst_sbp, abs(-g.inner(Lu, u) - g.grad_sq_values(u)) / g.grad_sq_values(u)
            )
    ok = worst_sym <= 1e-8 and worst_sbp <= 1e-8
    return _result("grid.laplacian_symmetry_and_sbp", ok, 1e-8 - max(worst_sym, worst_sbp),
                   worst_symmetry=worst_sym, worst_sbp=worst_sbp)


def prop_norm_refinement(scale: int = 1, seed: int = 0) -> dict:
    """Norms converge under grid refinement (512 -> 1024 -> 2048)."""
    worst = 0.0
    for N in (1, 3):
        vals = []
        for n in (512, 1024, 2048):
            g = RadialGrid(N, 12.0, n)
            u = gaussian_profile(g)
            vals.append((mass(u), grad_norm_sq(u)))
        m_err = abs(vals[0][0] - vals[2][0]) / vals[2][0]
        g_err = abs(vals[0][1] - vals[2][1]) / vals[2][1]
        worst = max(worst, m_err, g_err)
    return _result("grid.norm_refinement_stable", worst < 1e-4, 1e-4 - worst, worst=worst)


# ---------------------------------------------------------------------------
# model properties
# ---------------------------------------------------------------------------

def _random_params(rng) -> Params:
    for _ in range(200):
        N = int(rng.integers(1, 5))
        two_star = critical_exponent(N)
        hi = min(two_star, 8.0)
        p1 = float(rng.uniform(2.01, hi - 0.01))
        p2 = float(rng.uniform(2.01, hi - 0.01))
        r1 = float(rng.uniform(1.01, 3.0))
        r2 = float(rng.uniform(1.01, 3.0))
        if r1 + r2 >= two_star:
            continue
        return Params(N=N, p1=p1, p2=p2, r1=r1, r2=r2,
                      mu1=float(rng.uniform(0.2, 3.0)), mu2=float(rng.uniform(0.2, 3.0)),
                      beta=float(rng.uniform(0.0, 2.0)),
                      a1=float(rng.uniform(0.2, 3.0)), a2=float(rng.uniform(0.2, 3.0)))
    raise RuntimeError("could not draw valid parameters")


def prop_regime_partition(scale: int = 1, seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    n = 2000 * scale
    counts = {Regime.H0: 0, Regime.H1: 0, Regime.OTHER: 0}
    for _ in range(n):
        counts[classify_regime(_random_params(rng))] += 1
    ok = sum(counts.values()) == n
    return _result("model.regime_partition", ok, 0.0, counts={k.value: v for k, v in counts.items()})


def prop_beta0_monotone(scale: int = 1, seed: int = 0) -> dict:
    """beta0 nonincreasing in each mass (GN constants held fixed)."""
    gn = GNData(C_p1=0.7, C_p2=0.7, C_cross=0.55, source="fixed-test")
    base = Params(N=3, p1=2.5, p2=2.6, r1=2.0, r2=1.9, mu1=1.0, mu2=1.2, beta=0.1, a1=1.0, a2=1.0)
    rng = np.random.default_rng(seed)
    worst = np.inf
    ok = True
    for _ in range(40 * scale):
        a1, a2 = rng.uniform(0.2, 3.0, size=2)
        f = rng.uniform(1.05, 4.0)
        b = compute_thresholds(base.with_masses(a1, a2), gn).beta0
        b_up1 = compute_thresholds(base.with_masses(a1 * f, a2), gn).beta0
        b_up2 = compute_thresholds(base.with_masses(a1, a2 * f), gn).beta0
        ok = ok and (b_up1 <= b + 1e-12) and (b_up2 <= b + 1e-12)
        worst = min(worst, b - b_up1, b - b_up2)
    return _result("model.beta0_monotone_in_masses", ok, worst)


def prop_rho0_monotone_in_K(scale: int = 1, seed: int = 0) -> dict:
    """Larger K1/K2 (via mu) push the H0 ball radius out."""
    gn = GNData(C_p1=0.7, C_p2=0.7, C_cross=0.55, source="fixed-test")
    base = Params(N=3, p1=2.5, p2=2.6, r1=2.0, r2=1.9, mu1=1.0, mu2=1.2, beta=0.1, a1=1.0, a2=1.0)
    rng = np.random.default_rng(seed)
    ok = True
    worst = np.inf
    from dataclasses import replace

    for _ in range(40 * scale):
        c0 = compute_thresholds(base, gn)
        f = float(rng.uniform(1.1, 3.0))
        c1 = compute_thresholds(replace(base, mu1=base.mu1 * f), gn)
        ok = ok and c1.K1 > c0.K1 and c1.rho0 >= c0.rho0 - 1e-12
        worst = min(worst, c1.rho0 - c0.rho0)
    return _result("model.rho0_monotone_in_K", ok, worst)


# ---------------------------------------------------------------------------
# scalar properties
# ---------------------------------------------------------------------------

def prop_ground_state_uniqueness(scale: int = 1, seed: int = 0) -> dict:
    """Multi-start agreement of the ground-state solve (uniqueness surrogate)."""
    from .scalar import solve_ground_state, sech_seed

    N, p = 3, 3.0
    base = solve_ground_state(N, p, r_max=20.0, n_points=4096)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for k in range(5):
        grid = base.w0.grid
        seed_vals = sech_seed(grid, p) * float(rng.uniform(0.5, 2.0))
        seed_vals *= np.exp(-grid.r / float(rng.uniform(5.0, 30.0)))
        alt = solve_ground_state(N, p, r_max=20.0, n_points=4096, seed_values=seed_vals)
        worst = max(worst, float(np.max(np.abs(alt.w0.values - base.w0.values))))
    return _result("scalar.uniqueness_surrogate", worst <= 1e-6, 1e-6 - worst, sup_deviation=worst)


def prop_scaling_identities(scale: int = 1, seed: int = 0) -> dict:
    """Closed-form soliton norms against quadrature, and level monotone in mu."""
    from .scalar import scaled_soliton, level, scalar_energy

    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(3 * scale):
        N = int(rng.integers(1, 4))
        pc = 2.0 + 4.0 / N
        hi = min(critical_exponent(N), pc + 3.0)
        p = float(rng.uniform(pc + 0.15, hi - 0.05))
        a = float(rng.uniform(0.3, 3.0))
        mu = float(rng.uniform(0.3, 3.0))
        sol = scaled_soliton(a, mu, p, N)
        g = sol.profile.grid
        worst = max(
            worst,
            abs(g.grad_sq_values(sol.profile.values) - sol.grad_sq) / sol.grad_sq,
            abs(g.integrate(np.abs(sol.profile.values) ** p) - sol.lp_norm_p) / sol.lp_norm_p,
            abs(g.mass_values(sol.profile.values) - a) / a,
            abs(scalar_energy(sol.profile, mu, p) - level(N, a, mu, p)) / abs(level(N, a, mu, p)),
        )
    mus = np.linspace(0.5, 3.0, 8)
    lv = [level(3, 1.0, m, 4.0) for m in mus]
    mono = np.all(np.diff(lv) < 0)
    return _result("scalar.scaling_identities", worst <= 1e-4 and mono, 1e-4 - worst,
                   worst=worst, level_monotone_in_mu=bool(mono))


def prop_gn_constants(scale: int = 1, seed: int = 0) -> dict:
    """Gaussian quotient below the sharp constant for random (N, p)."""
    rng = np.random.default_rng(seed)
    worst = np.inf
    for _ in range(6 * scale):
        N = int(rng.integers(1, 4))
        hi = min(critical_exponent(N) - 0.1, 6.0)
        p = float(rng.uniform(2.1, hi))
        sharp = sharp_gn_constant(N, p)
        gq = gaussian_gn_quotient(N, p)
        worst = min(worst, sharp - gq)
    return _result("scalar.sharp_dominates_gaussian", worst >= -1e-10, worst)


# ---------------------------------------------------------------------------
# rearrangement properties
# ---------------------------------------------------------------------------

def _random_positive_profile(rng, N, n=1024, r_max=12.0) -> Profile:
    g = RadialGrid(N, r_max, n)
    v = np.zeros(g.n)
    for _ in range(int(rng.integers(1, 4))):
        amp = rng.uniform(0.2, 2.0)
        width = rng.uniform(0.5, 3.0)
        center = rng.uniform(0.0, 4.0)
        v += amp * np.exp(-((g.r - center) ** 2) / (2 * width**2))
    v[-1] = 0.0
    return Profile(g, v)


def prop_rearrangement_identities(scale: int = 1, seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    worst_add = 0.0
    worst_grad = np.inf
    worst_mono = 0.0
    n_trials = 20 * scale
    for _ in range(n_trials):
        N = int(rng.integers(1, 4))
        u = _random_positive_profile(rng, N)
        v = _random_positive_profile(rng, N)
        w = rearrange.shibata(u, v)
        worst_mono = max(worst_mono, float(np.max(np.diff(w.values))))
        for p in (2.0, 2.5, 4.0):
            lhs = w.grid.integrate(w.values**p)
            rhs = u.grid.integrate(u.values**p) + v.grid.integrate(v.values**p)
            worst_add = max(worst_add, abs(lhs - rhs) / rhs)
        slack = grad_norm_sq(u) + grad_norm_sq(v) - grad_norm_sq(w)
        worst_grad = min(worst_grad, slack / (grad_norm_sq(u) + grad_norm_sq(v)))
    ok = worst_add <= 1e-4 and worst_grad >= -1e-9 and worst_mono <= 1e-12
    return _result("rearrange.identities", ok, 1e-4 - worst_add,
                   worst_additivity=worst_add, worst_gradient_slack=worst_grad,
                   worst_monotonicity=worst_mono, trials=n_trials)


def prop_rearrangement_idempotent(scale: int = 1, seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    g = RadialGrid(3, 12.0, 1024)
    zero = Profile(g, np.zeros(g.n))
    u = gaussian_profile(g, 1.3, 1.7)
    once = rearrange.shibata(u, zero)
    twice = rearrange.shibata(once, Profile(once.grid, np.zeros(once.grid.n)), out_grid=once.grid)
    dev = float(np.max(np.abs(once.values - twice.values)))
    return _result("rearrange.idempotent_on_schwarz", dev <= 1e-8, 1e-8 - dev, deviation=dev)


# ---------------------------------------------------------------------------
# fibering / solver properties
# ---------------------------------------------------------------------------

def sample_h0_side_condition_exponents(rng, require_side: bool = True):
    """(N, p1, p2, r1, r2) under H0 with one of the two side conditions."""
    for _ in range(500):
        N = int(rng.integers(1, 7))
        pc = 2.0 + 4.0 / N
        two_star = critical_exponent(N)
        p1 = float(rng.uniform(2.001, pc - 0.001))
        p2 = float(rng.uniform(2.001, pc - 0.001))
        s_hi = min(two_star, pc + 4.0)
        s = float(rng.uniform(pc + 0.001, s_hi - 0.001))
        r1 = float(rng.uniform(1.001, s - 1.001))
        r2 = s - r1
        if r2 <= 1.0:
            continue
        side = (max(p1, p2) <= s - 2.0 / N) or (abs(p1 - p2) <= 2.0 / N)
        if require_side and not side:
            continue
        return N, p1, p2, r1, r2
    raise RuntimeError("could not sample exponents")


def prop_fibering_two_stationary(scale: int = 1, seed: int = 0, n_draws: int = 10000,
                                 n_grid: int = 100001) -> dict:
    """At most two stationary points of the dilation energy under H0 + side conditions."""
    rng = np.random.default_rng(seed)
    m = n_draws * scale
    a = np.exp(rng.uniform(np.log(1e-3), np.log(1e3), m))
    b1 = np.exp(rng.uniform(np.log(1e-3), np.log(1e3), m))
    b2 = np.exp(rng.uniform(np.log(1e-3), np.log(1e3), m))
    c = np.exp(rng.uniform(np.log(1e-3), np.log(1e3), m))
    pt1 = np.empty(m)
    pt2 = np.empty(m)
    rt = np.empty(m)
    for i in range(m):
        N, p1, p2, r1, r2 = sample_h0_side_condition_exponents(rng)
        pt1[i] = (p1 / 2.0 - 1.0) * N
        pt2[i] = (p2 / 2.0 - 1.0) * N
        rt[i] = ((r1 + r2) / 2.0 - 1.0) * N
    counts = fibering.count_stationary_batch(a, b1, b2, c, pt1, pt2, rt, n_grid=n_grid)
    mx = int(counts.max())
    return _result("solvers.fibering_at_most_two_stationary", mx <= 2, 2 - mx,
                   max_count=mx, histogram={int(k): int(v) for k, v in
                                            zip(*np.unique(counts, return_counts=True))})


def prop_local_solve_certificates(scale: int = 1, seed: int = 0) -> dict:
    """One small H0 local solve: negative energy, interior, negative multipliers."""
    gn = GNData(C_p1=sharp_gn_constant(3, 2.5), C_p2=sharp_gn_constant(3, 2.5),
                C_cross=sharp_gn_constant(3, 4.0))
    params = Params(N=3, p1=2.5, p2=2.5, r1=2.0, r2=2.0, mu1=1.0, mu2=1.0, beta=0.0, a1=1.0, a2=1.0)
    consts = compute_thresholds(params, gn)
    params = params.with_beta(consts.beta0 / 2.0)
    rec = local_minimize(params, consts, options=SolverOptions(grid_n=2048, tol=1e-5))
    lam_comb = rec.lambda1 * params.a1 + rec.lambda2 * params.a2
    ok = (
        rec.energy < 0
        and rec.diagnostics["kinetic"] < consts.rho0
        and rec.lambda1 < 0
        and rec.lambda2 < 0
        and lam_comb < 0
        and rec.pohozaev_residual <= 1e-5
        and rec.grad_residual <= 1e-5
    )
    return _result("solvers.local_certificates", ok, -rec.energy,
                   energy=rec.energy, lambda1=rec.lambda1, lambda2=rec.lambda2,
                   q_residual=rec.pohozaev_residual, grad_residual=rec.grad_residual)


# ---------------------------------------------------------------------------
# dynamics properties
# ---------------------------------------------------------------------------

def prop_conservation(scale: int = 1, seed: int = 0) -> dict:
    """Mass to round-off and energy to 1e-6 relative per unit time on smooth data."""
    from .dynamics import ComplexPair, evolve

    params = Params(N=1, p1=3.0, p2=3.0, r1=2.0, r2=2.0, mu1=1.0, mu2=1.0, beta=0.5, a1=1.0, a2=1.0)
    g = RadialGrid(1, 24.0, 2048)
    u1 = gaussian_profile(g, 0.8, 1.3).values.astype(complex)
    u2 = gaussian_profile(g, 0.6, 1.9).values.astype(complex)
    traj = evolve(ComplexPair(g, u1, u2), params, T=10.0, dt=2e-3)
    log = traj.invariants_log
    m_drift = max(
        np.max(np.abs(log[:, 1] - log[0, 1])) / log[0, 1],
        np.max(np.abs(log[:, 2] - log[0, 2])) / log[0, 2],
    ) / 10.0
    e_scale = max(abs(log[0, 3]), 1e-6)
    e_drift = np.max(np.abs(log[:, 3] - log[0, 3])) / e_scale / 10.0
    ok = m_drift <= 1e-8 and e_drift <= 1e-6
    return _result("dynamics.conservation", ok, 1e-8 - m_drift,
                   mass_drift_per_time=float(m_drift), energy_drift_per_time=float(e_drift))


ALL_PROPERTIES = [
    prop_volume_identity,
    prop_quadrature_order,
    prop_laplacian_identities,
    prop_norm_refinement,
    prop_regime_partition,
    prop_beta0_monotone,
    prop_rho0_monotone_in_K,
    prop_ground_state_uniqueness,
    prop_scaling_identities,
    prop_gn_constants,
    prop_rearrangement_identities,
    prop_rearrangement_idempotent,
    prop_fibering_two_stationary,
    prop_local_solve_certificates,
    prop_conservation,
]


def run_suite(scale: int = 1, seed: int = 0) -> dict:
    results = []
    workers = max_workers()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            futs = [ex.submit(fn, scale, seed) for fn in ALL_PROPERTIES]
            results = [f.result() for f in futs]
    else:
        results = [fn(scale, seed) for fn in ALL_PROPERTIES]
    passed = all(r["passed"] for r in results)
    return {"passed": passed, "n_properties": len(results), "results": results}
