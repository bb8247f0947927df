"""Mountain-pass and linking critical points above the local minimum.

Mountain pass (regime H0): admissible paths start inside the small ball
B(rho_bar), end outside the closure of B(rho0) at negative energy, and the
level gamma is the min-max of J over them.  The initial path is the
dilation segment through the local minimizer; the path maximum is lowered
by repeated local deformation (semi-implicit descent steps on the nodes
around the maximum, with mass retraction and mild 3-node smoothing) and the
max node is then polished to a critical point by the constrained Newton
solver.

Linking (regime H1): the two scaled solitons with coefficients mu_i + beta
span the rectangle surface g0(t1, t2) = (t1 * w1, t2 * w2) over
M = [rho1, R1] x [rho2, R2] (log-dilation parameters).  Boundary values are
pinned, interior nodes descend, and the surface maximum converges down to
the linking level, which stays strictly between max(l1, l2) + eps and the
initial surface maximum.  The crossing map

    F_g(t1, t2) = (d/ds I_{mu_1+beta,p_1}(s*g_1)|_0, d/ds I_{mu_2+beta,p_2}(s*g_2)|_0)

must vanish somewhere inside M on every admissible surface; the discrete
check combines the boundary winding number with a sign-change cell search.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import exp, log, sqrt
import enum

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.optimize import brentq, minimize_scalar

from .descent import (
    ConvergenceError,
    SolverOptions,
    _nonlinear_terms,
    newton_refine,
    profile_width,
    regrid_state,
    retract_masses,
)
from .fibering import fibering_curve
from .functional import Classification, SolutionRecord, StatePair, energy, make_record, residuals
from .params import GeometryConstants, Params, Regime, RegimeError, classify_regime
from .radial import Profile, RadialGrid, dilate_values
from .scalar import ground_state, level, scaled_soliton, soliton_scalings


class PathFamily(enum.Enum):
    DILATION_SEGMENT = "DilationSegment"
    LINKING_RECTANGLE = "LinkingRectangle"


@dataclass
class PathSpec:
    family: PathFamily
    endpoints: tuple           # dilation range (t_lo, t_hi) or rectangle corners
    refinement: int            # nodes per side


# ---------------------------------------------------------------------------
# shared deformation step
# ---------------------------------------------------------------------------

class _Stepper:
    """Semi-implicit descent step u <- retract((I + eta L)^{-1} (u + eta f)).

    The Laplacian is implicit, the nonlinearity explicit, so the usable step
    scales inversely with the nonlinear stiffness sup |f'|; steps are chosen
    per state from a small cache of factorizations.
    """

    def __init__(self, grid: RadialGrid, params: Params, eta: float):
        self.grid = grid
        self.params = params
        self.eta0 = eta
        self._L = grid.neg_laplacian_matrix().tocsc()
        self._I = sp.identity(grid.n, format="csc")
        self._lus: dict[float, object] = {}

    def _lu(self, eta: float):
        if eta not in self._lus:
            self._lus[eta] = spla.splu(self._I + eta * self._L)
        return self._lus[eta]

    def _stiffness(self, v1, v2) -> float:
        p = self.params
        s = (
            p.mu1 * (p.p1 - 1.0) * np.max(np.abs(v1)) ** (p.p1 - 2.0)
            + p.mu2 * (p.p2 - 1.0) * np.max(np.abs(v2)) ** (p.p2 - 2.0)
        )
        if p.beta > 0:
            s += p.beta * (p.r1 + p.r2) ** 2 * (
                np.max(np.abs(v1)) ** (p.r1 - 1.0) * np.max(np.abs(v2)) ** (p.r2 - 1.0)
                / max(np.max(np.abs(v1)), np.max(np.abs(v2)), 1e-300)
            )
        return float(max(s, 1e-300))

    def step(self, state: StatePair) -> StatePair:
        p = self.params
        v1, v2 = state.u1.values, state.u2.values
        eta = min(self.eta0, 0.5 / self._stiffness(v1, v2))
        eta = 2.0 ** round(np.log2(eta))  # quantize so factorizations are reused
        f1, f2 = _nonlinear_terms(p, v1, v2)
        lu = self._lu(eta)
        w1 = np.maximum(lu.solve(v1 + eta * f1), 0.0)
        w2 = np.maximum(lu.solve(v2 + eta * f2), 0.0)
        w1[-1] = w2[-1] = 0.0
        retract_masses(self.grid, w1, w2, p.a1, p.a2)
        return StatePair(Profile(self.grid, w1), Profile(self.grid, w2))


def _retracted_blend(grid, params, s_prev, s_mid, s_next) -> StatePair:
    w1 = 0.25 * s_prev.u1.values + 0.5 * s_mid.u1.values + 0.25 * s_next.u1.values
    w2 = 0.25 * s_prev.u2.values + 0.5 * s_mid.u2.values + 0.25 * s_next.u2.values
    w1, w2 = w1.copy(), w2.copy()
    retract_masses(grid, w1, w2, params.a1, params.a2)
    return StatePair(Profile(grid, w1), Profile(grid, w2))


def _polish(state: StatePair, params: Params, options: SolverOptions):
    """Adapted-grid Newton: recenter the grid on the state's width, refine on demand.

    The state is regridded to its own length scale *before* the first Newton
    solve; a minimax iterate typically lives on a grid sized for a much wider
    companion state, where a full Newton solve would be needlessly large.
    """
    w = profile_width(state)
    g = state.grid
    r_fit = options.r_max_widths * w
    if r_fit < 0.5 * g.r_max or w / g.h < 0.2 * options.width_points:
        n_fit = int(min(1 << 18, max(2048, options.width_points * options.r_max_widths)))
        state = regrid_state(state, min(r_fit, g.r_max), n_fit)
    lam = None
    for _ in range(4):
        state, lam, info = newton_refine(state, params, options, lam=lam)
        w = profile_width(state)
        g = state.grid
        _, _, grad_res, q_res = residuals(state, params)
        well_truncated = w < 0.5 * g.r_max
        fine = q_res <= 0.5 * options.tol and grad_res <= 0.5 * options.tol
        if well_truncated and fine:
            break
        r_new = options.r_max_widths * w if not well_truncated else g.r_max
        n_new = max(g.n, int(options.width_points * r_new / max(w, 1e-300)))
        if not fine:
            n_new = max(n_new, 2 * g.n)
        n_new = min(n_new, 1 << 18)
        if n_new == g.n and abs(r_new - g.r_max) < 1e-9 * g.r_max:
            break
        state = regrid_state(state, r_new, n_new)
    return state, lam, info


# ---------------------------------------------------------------------------
# mountain pass (H0)
# ---------------------------------------------------------------------------

def initial_dilation_path(
    local_sol: SolutionRecord,
    params: Params,
    constants: GeometryConstants,
    options: SolverOptions,
    n_nodes: int = 65,
) -> tuple[list[StatePair], PathSpec]:
    """Admissible dilation segment through the local minimizer.

    The low end sits inside B(rho_bar); the high end is outside the closure
    of B(rho0) with negative energy (both exist: the fibering map vanishes
    at 0+ and diverges to -infinity).
    """
    v = local_sol.state
    curve = fibering_curve(v, params, t_lo=1e-4, t_hi=1e6)
    kin_v = v.kinetic()
    rho_bar = options.rho_bar_frac * constants.rho0
    t_lo = sqrt(0.5 * rho_bar / kin_v)
    ts = np.geomspace(1.0, 1e6, 20001)
    th = curve.theta(ts)
    ok = (th < min(local_sol.energy, 0.0)) & (kin_v * ts**2 > 1.5 * constants.rho0)
    idx = np.nonzero(ok)[0]
    if len(idx) == 0:
        raise ConvergenceError("could not find a negative-energy endpoint outside the ball")
    t_hi = float(ts[idx[0]])
    # the segment's closed-form maximum is an upper bound for the min-max
    # level, evaluated on the minimizer's own well-resolved grid
    seg = np.geomspace(t_lo, t_hi, 40001)
    theta_upper = float(np.max(curve.theta(seg)))

    # the path spans two length scales: size r_max for its widest state and
    # cap n -- path energies only steer the deformation, the final polish
    # re-resolves the max node on its own scale
    w_v = profile_width(v)
    widest = w_v / min(t_lo, 1.0)
    width_hi = w_v / t_hi
    r_max = min(v.grid.r_max, 5.0 * widest)
    n = int(min(1 << 15, max(options.grid_n, 60.0 * r_max / width_hi)))
    base = regrid_state(v, r_max, n)
    grid = base.grid

    t_nodes = np.geomspace(t_lo, t_hi, n_nodes)
    path = []
    for t in t_nodes:
        w1 = dilate_values(grid, base.u1.values, float(t))
        w2 = dilate_values(grid, base.u2.values, float(t))
        retract_masses(grid, w1, w2, params.a1, params.a2)
        path.append(StatePair(Profile(grid, w1), Profile(grid, w2)))
    spec = PathSpec(PathFamily.DILATION_SEGMENT, (t_lo, t_hi), n_nodes)
    return path, spec, theta_upper


def mountain_pass(
    params: Params,
    constants: GeometryConstants,
    local_sol: SolutionRecord,
    options: SolverOptions | None = None,
    max_sweeps: int = 120,
) -> SolutionRecord:
    """Second critical point under H0, at positive energy."""
    options = options or SolverOptions()
    if classify_regime(params) is not Regime.H0:
        raise RegimeError("the mountain-pass construction runs under regime H0")
    path, spec, theta_upper = initial_dilation_path(local_sol, params, constants, options)
    grid = path[0].grid
    K = len(path)
    stepper = _Stepper(grid, params, eta=0.05)

    energies = np.array([energy(s, params) for s in path])
    max_hist = [float(energies.max())]
    for sweep in range(max_sweeps):
        k = int(np.argmax(energies))
        if k in (0, K - 1):
            raise ConvergenceError(
                "path maximum collapsed to an endpoint: mountain-pass geometry failed "
                "(check rho0/beta0)"
            )
        for j in (k - 1, k, k + 1):
            if 0 < j < K - 1:
                cand = stepper.step(path[j])
                if energy(cand, params) < energies[j]:
                    path[j] = cand
                    energies[j] = energy(cand, params)
        # mild smoothing around the maximum keeps the path from staircasing
        k = int(np.argmax(energies))
        if 0 < k < K - 1:
            cand = _retracted_blend(grid, params, path[k - 1], path[k], path[k + 1])
            if energy(cand, params) <= energies[k]:
                path[k] = cand
                energies[k] = energy(cand, params)
        max_hist.append(float(energies.max()))
        if sweep > 20 and max_hist[-10] - max_hist[-1] < 1e-10 * max(1.0, abs(max_hist[-1])):
            break

    k = int(np.argmax(energies))
    # the coarse path grid under-resolves the narrow top states; re-evaluate
    # the nodes around the maximum on their own scales for the level bound
    refined_upper = -np.inf
    for j in range(max(1, k - 1), min(K - 1, k + 2)):
        s = path[j]
        w = profile_width(s)
        fit = regrid_state(
            s, min(options.r_max_widths * w, s.grid.r_max), int(min(1 << 16, max(4096, 600 * options.r_max_widths)))
        )
        refined_upper = max(refined_upper, energy(fit, params))
    state, lam, newton_info = _polish(path[k].copy(), params, options)
    neg_tail = float(
        np.sum(np.minimum(state.u1.values, 0.0) ** 2)
        + np.sum(np.minimum(state.u2.values, 0.0) ** 2)
    )
    state.u1.values[:] = np.maximum(state.u1.values, 0.0)
    state.u2.values[:] = np.maximum(state.u2.values, 0.0)
    record = make_record(
        state,
        params,
        Classification.MOUNTAIN_PASS,
        constants,
        diagnostics={
            **newton_info,
            "path_spec": {"family": spec.family.value, "t_range": spec.endpoints, "nodes": spec.refinement},
            "path_max_history": max_hist,
            "level_upper_bound": float(theta_upper),
            "deformed_path_max": float(refined_upper),
            "clipped_mass_final": neg_tail,
            "kinetic": state.kinetic(),
            "annulus_floor": 0.25 * constants.rho0,
        },
    )
    if record.energy <= 0:
        raise ConvergenceError(f"mountain-pass solve returned energy {record.energy:g} <= 0")
    if record.grad_residual > options.tol or record.pohozaev_residual > options.tol:
        raise ConvergenceError(
            f"mountain-pass residuals above tolerance: grad {record.grad_residual:g}, "
            f"Q {record.pohozaev_residual:g}"
        )
    return record


# ---------------------------------------------------------------------------
# linking (H1)
# ---------------------------------------------------------------------------

@dataclass
class LinkingGeometry:
    w1: object
    w2: object
    eps: float
    rect: tuple[float, float, float, float]  # (rho1, R1, rho2, R2)
    c1: float
    c2: float
    beta1: float
    l1: float
    l2: float
    diagnostics: dict = field(default_factory=dict)


def interaction_max_constant(p: float, s: float) -> float:
    """max_{t>=0} [t^{s-2} - t^{p-2}/p] for 2 < s < p; used to absorb the cross term."""
    if not (2.0 < s < p):
        raise ValueError("needs 2 < r1+r2 < p")
    res = minimize_scalar(
        lambda t: -(t ** (s - 2.0) - t ** (p - 2.0) / p),
        bounds=(1e-12, (p * (s - 2.0) / (p - 2.0)) ** (1.0 / (p - s)) * 10.0),
        method="bounded",
        options={"xatol": 1e-14},
    )
    val = -res.fun
    closed = (p - s) / (p - 2.0) * (p * (s - 2.0) / (p - 2.0)) ** ((s - 2.0) / (p - s))
    if abs(val - closed) > 1e-8 * max(1.0, closed):
        raise AssertionError("interaction constant maximization disagrees with closed form")
    return float(closed)


def coupling_threshold(params: Params) -> tuple[float, float, float]:
    """(beta1, c1, c2): the largest coupling keeping the linking gap open.

    beta1 solves l1(mu1+b) + l2(mu2+b) - b(c1 a1 + c2 a2) = max(l1, l2); the
    left side is strictly decreasing, so the root is unique.
    """
    s = params.r1 + params.r2
    c1 = interaction_max_constant(params.p1, s)
    c2 = interaction_max_constant(params.p2, s)
    N = params.N
    l1 = level(N, params.a1, params.mu1, params.p1)
    l2 = level(N, params.a2, params.mu2, params.p2)
    top = max(l1, l2)

    def gap(b):
        return (
            level(N, params.a1, params.mu1 + b, params.p1)
            + level(N, params.a2, params.mu2 + b, params.p2)
            - b * (c1 * params.a1 + c2 * params.a2)
            - top
        )

    hi = 1.0
    while gap(hi) > 0:
        hi *= 2.0
    beta1 = brentq(gap, 0.0, hi, xtol=1e-14, rtol=1e-14)
    return float(beta1), c1, c2


def _dilated_scalar_energy(T: float, P: float, mu: float, p: float, N: int, s: float):
    """(I, dI/ds) of I_{mu,p} along s |-> s*w from the two integrals of w."""
    pt = (p / 2.0 - 1.0) * N
    val = exp(2.0 * s) * T / 2.0 - mu / p * exp(pt * s) * P
    der = exp(2.0 * s) * T - mu / p * pt * exp(pt * s) * P
    return val, der


def linking_setup(
    params: Params,
    constants: GeometryConstants,
    options: SolverOptions | None = None,
) -> LinkingGeometry:
    """Rectangle geometry for the linking level.

    Builds w_i = the scaled soliton with coefficient mu_i + beta, checks the
    coupling threshold, fixes eps as half the provable gap, and selects the
    dilation window [rho_i, R_i] so that 0 < I_{mu_i,p_i}(rho_i * w_i) < eps,
    I_{mu_i,p_i}(R_i * w_i) <= 0, with the s-derivative of the (mu_i+beta)
    energy positive at rho_i and negative at R_i.
    """
    options = options or SolverOptions()
    if classify_regime(params) is not Regime.H1:
        raise RegimeError("the linking construction runs under regime H1")
    beta1, c1, c2 = coupling_threshold(params)
    if params.beta >= beta1:
        raise ConvergenceError(
            f"coupling beta={params.beta:g} does not satisfy the linking threshold "
            f"beta1={beta1:g}; reduce beta by a factor {params.beta / beta1:g}"
        )
    N = params.N
    l1 = level(N, params.a1, params.mu1, params.p1)
    l2 = level(N, params.a2, params.mu2, params.p2)
    l1b = level(N, params.a1, params.mu1 + params.beta, params.p1)
    l2b = level(N, params.a2, params.mu2 + params.beta, params.p2)
    gap = l1b + l2b - params.beta * (c1 * params.a1 + c2 * params.a2) - max(l1, l2)
    eps = 0.5 * gap

    rect = []
    for (a, mu, p) in ((params.a1, params.mu1, params.p1), (params.a2, params.mu2, params.p2)):
        gs = ground_state(N, p)
        _, T, P = soliton_scalings(gs, a, mu + params.beta)
        # rising branch: I(s) ~ e^{2s} T/2 as s -> -inf; solve I = eps/2 below the max
        pt = (p / 2.0 - 1.0) * N
        s_max = log(p * T / (mu * pt * P)) / (pt - 2.0)

        def I_of(s, mu_=mu):
            return _dilated_scalar_energy(T, P, mu_, p, N, s)[0]

        if I_of(s_max) <= 0.5 * eps:
            raise ConvergenceError("scalar fibering maximum below eps/2; geometry collapsed")
        lo = s_max
        while I_of(lo) > 0.5 * eps:
            lo -= 1.0
        rho_i = brentq(lambda s: I_of(s) - 0.5 * eps, lo, s_max, xtol=1e-13)
        hi = s_max + 1.0
        while I_of(hi) > 0.0:
            hi += 1.0
        R_i = brentq(I_of, s_max, hi, xtol=1e-13) + 0.05  # margin keeps I(R_i) <= 0 strict
        # admissibility of the window in the (mu + beta) fibering
        dlo = _dilated_scalar_energy(T, P, mu + params.beta, p, N, rho_i)[1]
        dhi = _dilated_scalar_energy(T, P, mu + params.beta, p, N, R_i)[1]
        if not (rho_i < 0.0 < R_i and dlo > 0.0 > dhi):
            raise ConvergenceError("linking window failed the derivative sign conditions")
        rect.extend([rho_i, R_i])

    w1 = scaled_soliton(params.a1, params.mu1 + params.beta, params.p1, N)
    w2 = scaled_soliton(params.a2, params.mu2 + params.beta, params.p2, N)
    return LinkingGeometry(
        w1=w1, w2=w2, eps=eps, rect=tuple(rect), c1=c1, c2=c2, beta1=beta1, l1=l1, l2=l2,
        diagnostics={"l1_beta": l1b, "l2_beta": l2b, "gap": gap},
    )


def crossing_map(state: StatePair, params: Params) -> tuple[float, float]:
    """F_g components: the s=0 dilation derivatives of the (mu_i + beta) energies."""
    g = state.grid
    N = params.N
    out = []
    for (v, mu, p) in (
        (state.u1.values, params.mu1 + params.beta, params.p1),
        (state.u2.values, params.mu2 + params.beta, params.p2),
    ):
        T = g.grad_sq_values(v)
        P = g.integrate(np.abs(v) ** p)
        out.append(T - mu / p * (p / 2.0 - 1.0) * N * P)
    return tuple(out)


def _winding_number(F: np.ndarray) -> int:
    """Degree of the boundary loop of a (K,K,2) field sampled on the rectangle."""
    K = F.shape[0]
    loop = []
    loop += [F[i, 0] for i in range(K)]
    loop += [F[K - 1, j] for j in range(1, K)]
    loop += [F[i, K - 1] for i in range(K - 2, -1, -1)]
    loop += [F[0, j] for j in range(K - 2, 0, -1)]
    ang = np.array([np.arctan2(v[1], v[0]) for v in loop])
    d = np.diff(np.concatenate([ang, ang[:1]]))
    d = (d + np.pi) % (2 * np.pi) - np.pi
    return int(round(float(np.sum(d) / (2 * np.pi))))


def interior_zero_report(F: np.ndarray) -> dict:
    """Winding number plus the cell where both components change sign."""
    K = F.shape[0]
    wind = _winding_number(F)
    best = None
    for i in range(K - 1):
        for j in range(K - 1):
            c1 = F[i : i + 2, j : j + 2, 0]
            c2 = F[i : i + 2, j : j + 2, 1]
            if c1.min() <= 0.0 <= c1.max() and c2.min() <= 0.0 <= c2.max():
                score = max(np.abs(c1).min(), np.abs(c2).min())
                if best is None or score < best[0]:
                    best = (score, (i, j))
    return {
        "winding": wind,
        "zero_cell": None if best is None else best[1],
        "has_interior_zero": bool(wind != 0 and best is not None),
    }


class LinkingSurface:
    """K x K sampled surface over the rectangle, boundary pinned to g0."""

    def __init__(self, geometry: LinkingGeometry, params: Params, K: int, grid: RadialGrid):
        self.geometry = geometry
        self.params = params
        self.K = K
        self.grid = grid
        rho1, R1, rho2, R2 = geometry.rect
        self.s1 = np.linspace(rho1, R1, K)
        self.s2 = np.linspace(rho2, R2, K)
        base1 = np.interp(grid.r, geometry.w1.profile.grid.r, geometry.w1.profile.values, right=0.0)
        base2 = np.interp(grid.r, geometry.w2.profile.grid.r, geometry.w2.profile.values, right=0.0)
        self.states: list[list[StatePair]] = []
        for i in range(K):
            row = []
            for j in range(K):
                v1 = dilate_values(grid, base1, float(np.exp(self.s1[i])))
                v2 = dilate_values(grid, base2, float(np.exp(self.s2[j])))
                retract_masses(grid, v1, v2, params.a1, params.a2)
                row.append(StatePair(Profile(grid, v1), Profile(grid, v2)))
            self.states.append(row)

    def energies(self) -> np.ndarray:
        return np.array([[energy(s, self.params) for s in row] for row in self.states])

    def crossing_field(self) -> np.ndarray:
        return np.array([[crossing_map(s, self.params) for s in row] for row in self.states])

    def boundary_max(self, E: np.ndarray | None = None) -> float:
        E = self.energies() if E is None else E
        return float(max(E[0, :].max(), E[-1, :].max(), E[:, 0].max(), E[:, -1].max()))

    def interior_argmax(self, E: np.ndarray) -> tuple[int, int]:
        inner = E[1:-1, 1:-1]
        i, j = np.unravel_index(int(np.argmax(inner)), inner.shape)
        return i + 1, j + 1

    def deform(self, stepper: _Stepper, sweeps: int) -> list[np.ndarray]:
        """Interior descent sweeps (boundary fixed); returns max history."""
        hist = []
        for _ in range(sweeps):
            E = self.energies()
            for i in range(1, self.K - 1):
                for j in range(1, self.K - 1):
                    cand = stepper.step(self.states[i][j])
                    if energy(cand, self.params) < E[i, j]:
                        self.states[i][j] = cand
            hist.append(self.energies().max())
        return hist


def linking_solve(
    params: Params,
    constants: GeometryConstants,
    options: SolverOptions | None = None,
    K: int = 9,
    sweeps: int = 8,
) -> SolutionRecord:
    """Linking critical point under H1 (N >= 2), with geometry certificates.

    The returned diagnostics carry the boundary bound, the crossing-map
    reports for the initial and each deformed surface, and the level bracket
    (max(l1,l2) + eps, initial surface max].
    """
    options = options or SolverOptions()
    if params.N < 2:
        raise RegimeError("the linking solution needs N >= 2 (radial compactness)")
    geom = linking_setup(params, constants, options)
    rho1, R1, rho2, R2 = geom.rect

    # grid sized for the narrowest surface state, truncated for the widest
    k1 = sqrt(-geom.w1.lam)
    k2 = sqrt(-geom.w2.lam)
    narrow = min(1.0 / k1, 1.0 / k2) * exp(-max(R1, R2))
    wide = max(1.0 / k1, 1.0 / k2) * exp(-min(rho1, rho2))
    r_max = options.r_max_widths * wide
    n = int(min(1 << 17, max(options.grid_n, 150.0 * r_max / narrow)))
    grid = RadialGrid(params.N, r_max, n)

    surface = LinkingSurface(geom, params, K, grid)
    E0 = surface.energies()
    # J(g0) = I_1(t1) + I_2(t2) - beta (cross term) <= sup I_1 + sup I_2, and
    # each scalar sup over the dilation orbit of w_{a, mu+beta, p} equals the
    # mu-level l(N, a, mu, p): the sharp level bracket is (max(l)+eps, l1+l2]
    upper = geom.l1 + geom.l2
    lower = max(geom.l1, geom.l2) + geom.eps
    bmax = surface.boundary_max(E0)
    if not bmax < lower:
        raise ConvergenceError(
            f"boundary bound violated: sup_boundary J = {bmax:g} >= max(l1,l2)+eps = {lower:g}"
        )
    zero_reports = [interior_zero_report(surface.crossing_field())]
    if not zero_reports[0]["has_interior_zero"]:
        raise ConvergenceError("crossing map has no interior zero on the initial surface")

    stepper = _Stepper(grid, params, eta=0.02 / max(k1, k2) ** 2)
    max_hist = [float(E0.max())]
    for _ in range(sweeps):
        max_hist.extend(surface.deform(stepper, 1))
        zero_reports.append(interior_zero_report(surface.crossing_field()))
        if not zero_reports[-1]["has_interior_zero"]:
            raise ConvergenceError("crossing map lost its interior zero during deformation")

    E = surface.energies()
    i, j = surface.interior_argmax(E)
    state, lam, newton_info = _polish(surface.states[i][j].copy(), params, options)
    neg_tail = float(
        np.sum(np.minimum(state.u1.values, 0.0) ** 2)
        + np.sum(np.minimum(state.u2.values, 0.0) ** 2)
    )
    state.u1.values[:] = np.maximum(state.u1.values, 0.0)
    state.u2.values[:] = np.maximum(state.u2.values, 0.0)
    record = make_record(
        state,
        params,
        Classification.LINKING,
        constants,
        diagnostics={
            **newton_info,
            "path_spec": {"family": PathFamily.LINKING_RECTANGLE.value, "rect": geom.rect, "nodes": K},
            "eps": geom.eps,
            "beta1": geom.beta1,
            "scalar_levels": (geom.l1, geom.l2),
            "boundary_max": bmax,
            "level_bracket": (lower, upper),
            "initial_surface_max": float(E0.max()),
            "surface_max_history": max_hist,
            "crossing_reports": zero_reports,
            "clipped_mass_final": neg_tail,
            "kinetic": state.kinetic(),
        },
    )
    if not (record.energy > max(geom.l1, geom.l2)):
        raise ConvergenceError(
            f"linking energy {record.energy:g} fell below the scalar levels "
            f"max(l1,l2) = {max(geom.l1, geom.l2):g}"
        )
    if record.grad_residual > options.tol or record.pohozaev_residual > options.tol:
        raise ConvergenceError(
            f"linking residuals above tolerance: grad {record.grad_residual:g}, "
            f"Q {record.pohozaev_residual:g}"
        )
    return record
