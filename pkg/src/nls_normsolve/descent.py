"""Local minimization inside the gradient ball, and the shared Newton polish.

The minimizer of J on S(a1,a2) intersected with the gradient ball B(rho0) is
computed by a semi-implicit projected gradient flow (backward Euler on the
Laplacian, explicit nonlinearity, mass retraction by component rescaling
after every step, negative parts projected out) followed by a damped Newton
solve of the full first-order system

    -Delta u_i = lambda_i u_i + f_i(u1, u2),   ||u_i||_2^2 = a_i,

with the multipliers as unknowns.  The ball constraint is only monitored:
the minimizer is interior, so a step that would leave B(rho0) is shortened,
and escaping B(2 rho0) aborts the solve (it signals beta above the
threshold or inconsistent constants).
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .functional import (
    Classification,
    StatePair,
    energy,
    gradient_values,
    make_record,
    odd_power,
    residuals,
)
from .params import GeometryConstants, Params, Regime, RegimeError, classify_regime
from .fibering import curve_from_coefficients, dilation_exponents
from .radial import Profile, RadialGrid

from dataclasses import dataclass, field
from math import pi, sqrt


class ConvergenceError(RuntimeError):
    pass


@dataclass
class SolverOptions:
    grid_n: int = 4096
    r_max: float | None = None     # estimated from the initial fibering map when None
    tol: float = 1e-5              # certificate tolerance on both residuals
    newton_tol: float = 3e-9       # Newton target, relative to the equation scale
    descent_tol: float = 1e-3      # hand-off residual from flow to Newton
    max_flow_iter: int = 40000
    max_newton_iter: int = 60
    seed: int = 0
    rho_bar_frac: float = 0.25     # rho_bar = rho_bar_frac * rho0
    width_points: float = 500.0    # target resolution: nodes per profile width
    r_max_widths: float = 14.0     # truncation radius in units of the profile width


def pow_clamped(x: np.ndarray, e: float, rel_floor: float = 1e-13) -> np.ndarray:
    """|x|^e with negative exponents cut off near zero (non-Lipschitz tails)."""
    ax = np.abs(x)
    if e >= 0:
        return ax**e
    floor = rel_floor * (ax.max() if ax.size else 1.0)
    if floor == 0.0:
        return np.zeros_like(ax)
    return np.where(ax > floor, ax**e, 0.0)


def normalized_gaussian_values(grid: RadialGrid, t: float) -> np.ndarray:
    """Unit-mass Gaussian dilated by t (closed form, no resampling)."""
    N = grid.N
    v = (t / sqrt(pi)) ** (N / 2.0) * np.exp(-(t**2) * grid.r**2 / 2.0)
    v[-1] = 0.0
    return v


def gaussian_pair_coefficients(params: Params) -> tuple[float, float, float, float]:
    """Fibering coefficients of the unit-width Gaussian pair with the given masses.

    Closed forms for g_a(r) = sqrt(a) pi^{-N/4} e^{-r^2/2}:
    kinetic N a / 2 per component, ||g||_p^p = a^{p/2} (pi)^{N/2(1-p/2)} ... /p^{N/2}
    evaluated below via Gaussian moments.
    """
    N = params.N
    a1, a2 = params.a1, params.a2

    def lp_pow(a, p):
        # int |g_a|^p = a^{p/2} pi^{-N p /4} (2 pi / p)^{N/2} ... = a^{p/2} pi^{N/2 (1 - p/2)} p^{-N/2}
        return a ** (p / 2.0) * pi ** (N / 2.0 * (1.0 - p / 2.0)) * p ** (-N / 2.0)

    kin = 0.5 * N * (a1 + a2)
    b1 = params.mu1 / params.p1 * lp_pow(a1, params.p1)
    b2 = params.mu2 / params.p2 * lp_pow(a2, params.p2)
    s = params.r1 + params.r2
    cross = (
        a1 ** (params.r1 / 2.0)
        * a2 ** (params.r2 / 2.0)
        * pi ** (N / 2.0 * (1.0 - s / 2.0))
        * s ** (-N / 2.0)
    )
    c = params.beta * cross
    return kin, b1, b2, c


def _negative_dilation(params: Params) -> float:
    """A dilation t0 with theta(t0) < 0 and small kinetic term for the Gaussian pair.

    Exists for every H0/H1 parameter set (the energy is negative along t -> 0+).
    """
    kin, b1, b2, c = gaussian_pair_coefficients(params)
    exps = dilation_exponents(params)
    curve = curve_from_coefficients(kin, b1, b2, c, exps, t_lo=1e-10, t_hi=1e2, n_dense=200001)
    mins = [t for t, kind in curve.stationary_points if kind == "min"]
    if mins:
        t0 = mins[0]
        if curve.theta(t0) < 0:
            return t0
    # fall back to scanning for negativity
    ts = np.geomspace(1e-10, 1e2, 4001)
    th = curve.theta(ts)
    neg = np.nonzero(th < 0)[0]
    if len(neg) == 0:
        raise ConvergenceError("could not locate a negative-energy dilation of the seed pair")
    return float(ts[th.argmin()])


def initial_ball_state(
    params: Params, constants: GeometryConstants, options: SolverOptions
) -> StatePair:
    """Seed J < 0 state inside B(rho0): a small dilation of a Gaussian pair."""
    t0 = _negative_dilation(params)
    kin = gaussian_pair_coefficients(params)[0]
    # shrink until the kinetic term t^2 kin clears the ball comfortably
    while t0**2 * kin > 0.5 * constants.rho0:
        t0 *= 0.7
    width = 1.0 / t0
    r_max = options.r_max if options.r_max is not None else options.r_max_widths * width
    grid = RadialGrid(params.N, r_max, options.grid_n)
    u1 = sqrt(params.a1) * normalized_gaussian_values(grid, t0) if params.a1 > 0 else np.zeros(grid.n)
    u2 = sqrt(params.a2) * normalized_gaussian_values(grid, t0) if params.a2 > 0 else np.zeros(grid.n)
    return StatePair(Profile(grid, u1), Profile(grid, u2))


def retract_masses(grid: RadialGrid, v1, v2, a1, a2):
    for v, a in ((v1, a1), (v2, a2)):
        if a <= 0:
            v[:] = 0.0
            continue
        m = grid.mass_values(v)
        if m <= 0:
            raise ConvergenceError("component mass collapsed to zero")
        v *= sqrt(a / m)


def _nonlinear_terms(params: Params, v1, v2):
    a1 = np.abs(v1)
    a2 = np.abs(v2)
    f1 = params.mu1 * odd_power(v1, params.p1 - 1.0)
    f2 = params.mu2 * odd_power(v2, params.p2 - 1.0)
    if params.beta > 0:
        f1 = f1 + params.beta * params.r1 * odd_power(v1, params.r1 - 1.0) * a2**params.r2
        f2 = f2 + params.beta * params.r2 * a1**params.r1 * odd_power(v2, params.r2 - 1.0)
    return f1, f2


def flow_to_tolerance(
    state: StatePair,
    params: Params,
    constants: GeometryConstants | None,
    options: SolverOptions,
    enforce_ball: bool = True,
) -> tuple[StatePair, dict]:
    """Semi-implicit projected flow; stops at options.descent_tol residual.

    The Laplacian is implicit, so the step is limited only by the explicit
    nonlinearity; it grows geometrically while the energy keeps dropping
    (essential near flat minima, where the curvature may be orders of
    magnitude below 1).  Factorizations are cached per quantized step.
    """
    grid = state.grid
    L = grid.neg_laplacian_matrix().tocsc()
    I = sp.identity(grid.n, format="csc")
    lus: dict[float, object] = {}

    def lu_for(step):
        q = 2.0 ** round(np.log2(step))
        if q not in lus:
            lus[q] = spla.splu(I + q * L)
        return q, lus[q]

    def stiffness(v1, v2):
        m1 = float(np.max(np.abs(v1))) if params.a1 > 0 else 0.0
        m2 = float(np.max(np.abs(v2))) if params.a2 > 0 else 0.0
        s = 0.0
        if m1 > 0:
            s += params.mu1 * (params.p1 - 1.0) * m1 ** (params.p1 - 2.0)
        if m2 > 0:
            s += params.mu2 * (params.p2 - 1.0) * m2 ** (params.p2 - 2.0)
        if params.beta > 0 and m1 > 0 and m2 > 0:
            s += params.beta * (params.r1 + params.r2) ** 2 * m1 ** (params.r1 - 1.0) * m2 ** (
                params.r2 - 1.0
            ) / max(m1, m2)
        return max(s, 1e-300)

    v1 = state.u1.values.copy()
    v2 = state.u2.values.copy()
    a1, a2 = params.a1, params.a2
    retract_masses(grid, v1, v2, a1, a2)

    E = energy(StatePair(Profile(grid, v1), Profile(grid, v2)), params)
    s = min(0.5, 0.2 / stiffness(v1, v2))
    clipped_mass = 0.0
    it = 0
    stagnant = 0
    while it < options.max_flow_iter:
        it += 1
        s = min(s, 0.5 / stiffness(v1, v2))
        s_q, lu = lu_for(s)
        f1, f2 = _nonlinear_terms(params, v1, v2)
        w1 = lu.solve(v1 + s_q * f1) if a1 > 0 else v1
        w2 = lu.solve(v2 + s_q * f2) if a2 > 0 else v2
        neg = float(np.sum(np.minimum(w1, 0.0) ** 2) + np.sum(np.minimum(w2, 0.0) ** 2))
        clipped_mass = max(clipped_mass, neg)
        w1 = np.maximum(w1, 0.0)
        w2 = np.maximum(w2, 0.0)
        w1[-1] = w2[-1] = 0.0
        retract_masses(grid, w1, w2, a1, a2)
        cand = StatePair(Profile(grid, w1), Profile(grid, w2))
        kin = cand.kinetic()
        if enforce_ball and constants is not None:
            if kin > 2.0 * constants.rho0:
                raise ConvergenceError(
                    f"iterate left B(2 rho0) (kinetic {kin:g} > {2*constants.rho0:g}); "
                    "beta may exceed beta0 for these constants"
                )
            if kin > constants.rho0:
                s *= 0.25
                if s < 1e-10:
                    raise ConvergenceError("step collapsed while avoiding the ball boundary")
                continue
        E_new = energy(cand, params)
        if E_new > E + 1e-13 * max(1.0, abs(E)):
            s *= 0.25
            if s < 1e-12:
                break
            continue
        rel_drop = abs(E - E_new) / max(abs(E_new), 1e-300)
        v1, v2, E = w1, w2, E_new
        s = min(s * 1.3, 1e6)
        if it % 25 == 0:
            st = StatePair(Profile(grid, v1), Profile(grid, v2))
            _, _, grad_res, _ = residuals(st, params)
            if grad_res < options.descent_tol:
                break
        stagnant = stagnant + 1 if rel_drop < 1e-14 else 0
        if stagnant > 200:
            break
    out = StatePair(Profile(grid, v1), Profile(grid, v2))
    info = {"flow_iterations": it, "clipped_mass": clipped_mass, "final_step": s}
    return out, info


def newton_refine(
    state: StatePair,
    params: Params,
    options: SolverOptions,
    lam: tuple[float, float] | None = None,
) -> tuple[StatePair, tuple[float, float], dict]:
    """Damped Newton on the Euler-Lagrange system with mass constraints.

    Unknowns (u1, u2, lambda1, lambda2); Dirichlet rows pin the boundary
    nodes.  Ill-conditioned steps fall back to a Tikhonov-damped system,
    growing the damping until the residual decreases.
    """
    grid = state.grid
    n = grid.n
    L = grid.neg_laplacian_matrix().tocsr()
    a1, a2 = params.a1, params.a2
    v1 = state.u1.values.copy()
    v2 = state.u2.values.copy()
    if lam is None:
        lam1, lam2, _, _ = residuals(state, params)
    else:
        lam1, lam2 = lam

    def full_residual(v1, v2, lam1, lam2):
        f1, f2 = _nonlinear_terms(params, v1, v2)
        F1 = L @ v1 - lam1 * v1 - f1
        F2 = L @ v2 - lam2 * v2 - f2
        F1[-1] = v1[-1]
        F2[-1] = v2[-1]
        # a zero-mass component is pinned to zero with its multiplier
        c1 = grid.mass_values(v1) - a1 if a1 > 0 else lam1
        c2 = grid.mass_values(v2) - a2 if a2 > 0 else lam2
        return np.concatenate([F1, F2, [c1, c2]])

    def el_block(v1, v2, lam1, lam2, tau=0.0):
        """Sparse 2n x 2n Euler-Lagrange Jacobian (Dirichlet rows pinned)."""
        av1, av2 = np.abs(v1), np.abs(v2)
        d11 = params.mu1 * (params.p1 - 1.0) * av1 ** (params.p1 - 2.0)
        d22 = params.mu2 * (params.p2 - 1.0) * av2 ** (params.p2 - 2.0)
        d12 = np.zeros(n)
        if params.beta > 0:
            r1, r2, b = params.r1, params.r2, params.beta
            d11 = d11 + b * r1 * (r1 - 1.0) * pow_clamped(v1, r1 - 2.0) * av2**r2
            d22 = d22 + b * r2 * (r2 - 1.0) * av1**r1 * pow_clamped(v2, r2 - 2.0)
            d12 = -b * r1 * r2 * odd_power(v1, r1 - 1.0) * odd_power(v2, r2 - 1.0)
        mask = np.ones(n)
        mask[-1] = 0.0  # Dirichlet rows carry only the identity
        A11 = sp.diags(mask) @ (L - sp.diags(lam1 + d11 - tau))
        A22 = sp.diags(mask) @ (L - sp.diags(lam2 + d22 - tau))
        A11 = A11 + sp.csr_matrix(([1.0], ([n - 1], [n - 1])), shape=(n, n))
        A22 = A22 + sp.csr_matrix(([1.0], ([n - 1], [n - 1])), shape=(n, n))
        A12 = sp.diags(mask * d12)
        return sp.bmat([[A11, A12], [A12.T, A22]], format="csc")

    def solve_kkt(v1, v2, lam1, lam2, F, tau=0.0):
        """Bordered solve by block elimination: the mass rows/columns are dense,
        so the Schur complement on the two multipliers keeps the factorization
        sparse (a direct factorization of the full bordered matrix fills in
        catastrophically)."""
        A = el_block(v1, v2, lam1, lam2, tau)
        lu = spla.splu(A)
        B = np.zeros((2 * n, 2))
        if a1 > 0:
            B[:n, 0] = -v1
            B[n - 1, 0] = 0.0
        if a2 > 0:
            B[n : 2 * n, 1] = -v2
            B[2 * n - 1, 1] = 0.0
        C = np.zeros((2, 2 * n))
        D = np.zeros((2, 2))
        if a1 > 0:
            C[0, :n] = 2.0 * grid.W * v1
        else:
            D[0, 0] = 1.0
        if a2 > 0:
            C[1, n : 2 * n] = 2.0 * grid.W * v2
        else:
            D[1, 1] = 1.0
        D = D + tau * np.eye(2)
        Fu, Fc = F[: 2 * n], F[2 * n :]
        X = lu.solve(np.column_stack([Fu, B[:, 0], B[:, 1]]))
        y, Y = X[:, 0], X[:, 1:]
        S = D - C @ Y
        dlam = np.linalg.solve(S, Fc - C @ y)
        du = y - Y @ dlam
        return np.concatenate([du, dlam])

    F = full_residual(v1, v2, lam1, lam2)
    res = np.linalg.norm(F)
    newton_its = 0
    for _ in range(options.max_newton_iter):
        # stop relative to the equation's own magnitude, not an O(1) proxy
        scale = max(
            np.linalg.norm(np.concatenate([lam1 * v1, lam2 * v2])),
            1e-6 * np.linalg.norm(np.concatenate([v1, v2])),
            1e-300,
        )
        if res / scale < options.newton_tol:
            break
        newton_its += 1
        tau = 0.0
        for attempt in range(8):
            try:
                dz = solve_kkt(v1, v2, lam1, lam2, F, tau)
            except Exception:
                dz = np.full(2 * n + 2, np.nan)
            if np.all(np.isfinite(dz)):
                break
            tau = 1e-10 * max(res, 1.0) if tau == 0.0 else tau * 100.0
        if not np.all(np.isfinite(dz)):
            raise ConvergenceError("Newton linear solve failed")
        step = 1.0
        improved = False
        for _ in range(40):
            nv1 = v1 - step * dz[:n]
            nv2 = v2 - step * dz[n : 2 * n]
            nl1 = lam1 - step * dz[2 * n]
            nl2 = lam2 - step * dz[2 * n + 1]
            F_new = full_residual(nv1, nv2, nl1, nl2)
            r_new = np.linalg.norm(F_new)
            if r_new < res * (1.0 - 1e-4 * step):
                v1, v2, lam1, lam2, F, res = nv1, nv2, nl1, nl2, F_new, r_new
                improved = True
                break
            step *= 0.5
        if not improved:
            break
    out = StatePair(Profile(grid, v1), Profile(grid, v2))
    info = {"newton_iterations": newton_its, "newton_residual": float(res / scale)}
    return out, (float(lam1), float(lam2)), info


def dilation_align(state: StatePair, params: Params, kind: str = "min") -> StatePair:
    """Rescale the state to the requested stationary point of its fibering map.

    The dilation orbit is the soft direction of the constrained problem: the
    flow and Newton both move slowly along it, while the stationary dilation
    is closed-form in the five integrals.  Aligning zeroes Q up to
    interpolation error and drops the iterate into the Newton basin.
    Widening dilations (t < 1) re-grid first so no mass crosses r_max.
    """
    from .fibering import fibering_curve

    curve = fibering_curve(state, params, t_lo=1e-6, t_hi=1e6)
    cands = [t for t, k in curve.stationary_points if k == kind]
    if not cands:
        return state
    t = min(cands, key=lambda tt: abs(np.log(tt)))
    if abs(t - 1.0) < 1e-12:
        return state
    grid = state.grid
    if t < 1.0:
        grid = RadialGrid(grid.N, grid.r_max / t, grid.n)
        state = regrid_state(state, grid.r_max, grid.n)
    from .radial import dilate_values

    w1 = dilate_values(grid, state.u1.values, t)
    w2 = dilate_values(grid, state.u2.values, t)
    retract_masses(grid, w1, w2, params.a1, params.a2)
    return StatePair(Profile(grid, w1), Profile(grid, w2))


def profile_width(state: StatePair) -> float:
    """Radius containing 99% of the total mass; the natural length scale."""
    g = state.grid
    dens = g.W * (state.u1.values**2 + state.u2.values**2)
    total = dens.sum()
    if total <= 0:
        return g.r_max
    k = int(np.searchsorted(np.cumsum(dens), 0.99 * total))
    return float(g.r[min(k, g.n - 1)])


def regrid_state(state: StatePair, r_max: float, n: int) -> StatePair:
    grid = RadialGrid(state.grid.N, r_max, n)
    v1 = np.interp(grid.r, state.grid.r, state.u1.values, right=0.0)
    v2 = np.interp(grid.r, state.grid.r, state.u2.values, right=0.0)
    v1[-1] = v2[-1] = 0.0
    return StatePair(Profile(grid, v1), Profile(grid, v2))


def local_minimize(
    params: Params,
    constants: GeometryConstants,
    initial: StatePair | None = None,
    options: SolverOptions | None = None,
):
    """Local minimizer record inside B(rho0); energy is certified negative.

    Both components stay nonnegative through the flow; the Newton polish may
    introduce round-off-level negative tails, which are projected out and
    reported under diagnostics["clipped_mass_final"].
    """
    options = options or SolverOptions()
    regime = classify_regime(params)
    if regime is Regime.OTHER:
        raise RegimeError("local minimization requires regime H0 or H1")
    if params.a1 == 0.0 and params.a2 == 0.0:
        raise ValueError("at least one mass must be positive")
    state = initial if initial is not None else initial_ball_state(params, constants, options)

    state, flow_info = flow_to_tolerance(state, params, constants, options)
    # the dilation orbit is the slow direction: land on the fibering minimum
    # before Newton, then flow briefly to shed the interpolation debris
    state = dilation_align(state, params, kind="min")
    state, _ = flow_to_tolerance(state, params, constants, options)
    state = dilation_align(state, params, kind="min")
    state, lam, newton_info = newton_refine(state, params, options)

    # adapt the grid: re-center the truncation on the converged width, then
    # refine until the Pohozaev defect (pure discretization error) is in tolerance
    for _ in range(4):
        w = profile_width(state)
        g = state.grid
        _, _, grad_res, q_res = residuals(state, params)
        well_truncated = w < 0.5 * g.r_max
        fine_enough = q_res <= 0.5 * options.tol and grad_res <= 0.5 * options.tol
        if well_truncated and fine_enough:
            break
        r_new = options.r_max_widths * w if not well_truncated else g.r_max
        n_new = g.n if well_truncated else max(g.n, int(options.width_points * r_new / w))
        if not fine_enough:
            n_new = max(n_new, 2 * g.n)
        n_new = min(n_new, 1 << 18)
        if n_new == g.n and abs(r_new - g.r_max) < 1e-9 * g.r_max:
            break
        state = regrid_state(state, r_new, n_new)
        state, lam, newton_info = newton_refine(state, params, options, lam=lam)

    neg_tail = float(
        np.sum(np.minimum(state.u1.values, 0.0) ** 2) + np.sum(np.minimum(state.u2.values, 0.0) ** 2)
    )
    state.u1.values[:] = np.maximum(state.u1.values, 0.0)
    state.u2.values[:] = np.maximum(state.u2.values, 0.0)

    record = make_record(
        state,
        params,
        Classification.LOCAL_MIN,
        constants,
        diagnostics={
            **flow_info,
            **newton_info,
            "clipped_mass_final": neg_tail,
            "kinetic": state.kinetic(),
            "grid": {"n": state.grid.n, "r_max": state.grid.r_max},
        },
    )
    if record.energy >= 0:
        raise ConvergenceError(f"local solve ended with nonnegative energy {record.energy:g}")
    if record.grad_residual > options.tol or record.pohozaev_residual > options.tol:
        raise ConvergenceError(
            f"residuals above tolerance: grad {record.grad_residual:g}, "
            f"Q {record.pohozaev_residual:g}"
        )
    if state.kinetic() >= constants.rho0:
        raise ConvergenceError("converged state is not inside B(rho0)")
    return record


def local_level(params: Params, constants: GeometryConstants, options: SolverOptions | None = None) -> float:
    """m(d1, d2): the local-minimum energy; zero masses shrink the system."""
    if params.a1 == 0.0 and params.a2 == 0.0:
        return 0.0
    rec = local_minimize(params, constants, options=options)
    return rec.energy


def subadditivity_check(
    params: Params,
    constants: GeometryConstants,
    d1: float,
    d2: float,
    options: SolverOptions | None = None,
) -> dict:
    """m(a1,a2) <= m(d1,d2) + m(a1-d1, a2-d2) within twice the solver tolerance."""
    if not (0.0 <= d1 <= params.a1 and 0.0 <= d2 <= params.a2):
        raise ValueError("split masses must lie inside [0, a_i]")
    options = options or SolverOptions()
    m_full = local_level(params, constants, options)
    m_left = local_level(params.with_masses(d1, d2), constants, options) if (d1, d2) != (0.0, 0.0) else 0.0
    rest = (params.a1 - d1, params.a2 - d2)
    m_right = (
        local_level(params.with_masses(*rest), constants, options)
        if rest != (0.0, 0.0)
        else 0.0
    )
    slack = m_left + m_right + 2.0 * options.tol - m_full
    return {
        "m_full": m_full,
        "m_left": m_left,
        "m_right": m_right,
        "slack": slack,
        "holds": bool(slack >= 0.0),
    }
