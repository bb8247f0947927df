"""Scalar ground states, scaled solitons and sharp interpolation constants.

``ground_state`` solves -w'' - (N-1) w'/r + w = w^{p-1} on the radial grid
(damped Newton; a sech-shaped seed works for every subcritical pair (N, p),
with continuation in p as a fallback).  Everything else is algebra on its
two integrals C0 = int |grad w0|^2 and C1 = int w0^p together with
M0 = int w0^2: a scaled soliton with frequency lambda < 0 and coefficient mu
is A w0(kappa x) with kappa = sqrt(-lambda), A = (kappa^2/mu)^{1/(p-2)}, and
matching the mass a fixes

    kappa = (a / M0)^{(p-2)/delta} mu^{2/delta},        delta = 4 - N(p-2),

from which the kinetic and L^p integrals and the least-energy level follow
in closed form.  (Note the base a/M0: the mass scaling runs through the L^2
norm of w0, not through C0.)
"""

from __future__ import annotations

from dataclasses import dataclass
from math import exp, pi, sqrt

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .params import critical_exponent, gn_exponent, mass_critical_exponent
from .radial import Profile, RadialGrid, gaussian_profile

DEFAULT_RMAX = 30.0
DEFAULT_N_POINTS = 16384


class GroundStateError(RuntimeError):
    """The Newton iteration failed to produce a positive decreasing solution."""


@dataclass(frozen=True)
class ScalarGroundState:
    N: int
    p: float
    w0: Profile
    C0: float  # int |grad w0|^2
    C1: float  # int w0^p
    M0: float  # int w0^2
    residual: float


@dataclass(frozen=True)
class ScaledSoliton:
    a: float
    mu: float
    p: float
    N: int
    lam: float  # Lagrange frequency, < 0
    profile: Profile
    grad_sq: float
    lp_norm_p: float


def sech_seed(grid: RadialGrid, p: float) -> np.ndarray:
    """Closed-form 1D soliton shape; a serviceable Newton seed in any dimension."""
    r = grid.r
    v = (p / 2.0) ** (1.0 / (p - 2.0)) * np.cosh((p - 2.0) * r / 2.0) ** (-2.0 / (p - 2.0))
    v[-1] = 0.0
    return v


def _newton_bvp(grid: RadialGrid, p: float, seed: np.ndarray, tol: float, max_iter: int = 80):
    """Damped Newton for -Delta w + w - |w|^{p-2} w = 0 with Dirichlet at r_max."""
    L = grid.neg_laplacian_matrix().tolil()
    L[-1, :] = 0.0
    L = L.tocsr()
    I = sp.identity(grid.n, format="csr")
    last_row = sp.csr_matrix(([1.0], ([0], [grid.n - 1])), shape=(1, grid.n))

    def residual(w):
        F = L @ w + w - np.abs(w) ** (p - 2) * w
        F[-1] = w[-1]
        return F

    w = seed.copy()
    res = float(np.max(np.abs(residual(w))))
    for _ in range(max_iter):
        if res < tol:
            break
        J = (L + I - sp.diags((p - 1.0) * np.abs(w) ** (p - 2.0))).tolil()
        J[-1, :] = 0.0
        J[-1, -1] = 1.0
        dw = spla.spsolve(J.tocsr(), residual(w))
        step = 1.0
        for _ in range(40):
            cand = w - step * dw
            r2 = float(np.max(np.abs(residual(cand))))
            if r2 < res:
                w, res = cand, r2
                break
            step *= 0.5
        else:
            break
    return w, res


def solve_ground_state(
    N: int,
    p: float,
    r_max: float = DEFAULT_RMAX,
    n_points: int = DEFAULT_N_POINTS,
    tol: float = 1e-9,
    seed_values: np.ndarray | None = None,
) -> ScalarGroundState:
    """Positive radial decreasing solution of -Delta w + w = w^{p-1}.

    The default truncation keeps w(r_max)/w(0) near e^{-r_max}, far below the
    quadrature tolerance.  Raises ``GroundStateError`` when Newton stalls or
    the iterate loses positivity/monotonicity (e.g. it collapsed to zero).
    """
    if not (2.0 < p < critical_exponent(N)):
        raise ValueError(f"p={p} outside the subcritical range (2, 2*) for N={N}")
    grid = RadialGrid(N, r_max, n_points)
    seed = sech_seed(grid, p) if seed_values is None else np.asarray(seed_values, float)
    w, res = _newton_bvp(grid, p, seed, tol)
    if res > tol or np.max(w) < 1e-3:
        # continuation in p from an easier exponent
        w = sech_seed(grid, 2.5)
        ok = False
        for q in np.linspace(2.5, p, 8):
            w, res = _newton_bvp(grid, q, w, tol)
            ok = res <= tol
        if not (ok and np.max(w) >= 1e-3):
            raise GroundStateError(f"Newton failed for N={N}, p={p}: residual {res:g}")
    if np.min(w[:-1]) <= 0 or np.any(np.diff(w[:-1]) > 1e-12 * np.max(w)):
        raise GroundStateError(f"solution for N={N}, p={p} is not positive decreasing")
    prof = Profile(grid, w)
    C0 = grid.grad_sq_values(w)
    C1 = grid.integrate(np.abs(w) ** p)
    M0 = grid.mass_values(w)
    return ScalarGroundState(N=N, p=float(p), w0=prof, C0=C0, C1=C1, M0=M0, residual=res)


_CACHE: dict[tuple[int, float, float, int], ScalarGroundState] = {}


def ground_state(
    N: int, p: float, r_max: float = DEFAULT_RMAX, n_points: int = DEFAULT_N_POINTS
) -> ScalarGroundState:
    """Cached ground state (read-only after first construction)."""
    key = (N, round(float(p), 12), r_max, n_points)
    if key not in _CACHE:
        _CACHE[key] = solve_ground_state(N, p, r_max=r_max, n_points=n_points)
    return _CACHE[key]


def soliton_scalings(gs: ScalarGroundState, a: float, mu: float) -> tuple[float, float, float]:
    """(kappa, grad_sq, lp_norm_p) for the mass-a, coefficient-mu soliton."""
    N, p = gs.N, gs.p
    delta = 4.0 - N * (p - 2.0)
    kappa = (a / gs.M0) ** ((p - 2.0) / delta) * mu ** (2.0 / delta)
    e_a = (2.0 * p - N * (p - 2.0)) / delta
    grad_sq = (a / gs.M0) ** e_a * mu ** (4.0 / delta) * gs.C0
    lp_p = (a / gs.M0) ** e_a * mu ** (N * (p - 2.0) / delta) * gs.C1
    return kappa, grad_sq, lp_p


def scaled_soliton(
    a: float,
    mu: float,
    p: float,
    N: int,
    r_max: float | None = None,
    n_points: int = DEFAULT_N_POINTS,
) -> ScaledSoliton:
    """The unique positive soliton with mass a on the mass-supercritical branch."""
    if a <= 0 or mu <= 0:
        raise ValueError("a and mu must be positive")
    if p <= mass_critical_exponent(N):
        raise ValueError(
            f"p={p} <= 2+4/N: the mass-matching scaling map is used only on the "
            "supercritical branch"
        )
    gs = ground_state(N, p)
    kappa, grad_sq, lp_p = soliton_scalings(gs, a, mu)
    A = (kappa**2 / mu) ** (1.0 / (p - 2.0))
    if r_max is None:
        r_max = gs.w0.grid.r_max / kappa
    grid = RadialGrid(N, r_max, n_points)
    vals = A * np.interp(kappa * grid.r, gs.w0.grid.r, gs.w0.values, right=0.0)
    vals[-1] = 0.0
    return ScaledSoliton(
        a=a, mu=mu, p=float(p), N=N, lam=-(kappa**2),
        profile=Profile(grid, vals), grad_sq=grad_sq, lp_norm_p=lp_p,
    )


def level(N: int, a: float, mu: float, p: float) -> float:
    """Least energy of (1/2)||grad u||^2 - (mu/p)||u||_p^p over the soliton branch."""
    if p <= mass_critical_exponent(N):
        raise ValueError(f"p={p} <= 2+4/N: the level formula needs the supercritical branch")
    gs = ground_state(N, p)
    delta = 4.0 - N * (p - 2.0)
    e_a = (2.0 * p - N * (p - 2.0)) / delta
    return (
        (1.0 / p)
        * ((p / 2.0 - 1.0) * N / 2.0 - 1.0)
        * (a / gs.M0) ** e_a
        * mu ** (4.0 / delta)
        * gs.C1
    )


def dilation_energy(w: Profile, mu: float, p: float, s: float) -> tuple[float, float]:
    """(I_mu,p(s*w), d/ds I_mu,p(s*w)) where (s*w)(x) = e^{Ns/2} w(e^s x).

    Closed in the two integrals of w: with T = ||grad w||^2, P = ||w||_p^p and
    ptil = (p/2-1)N,
        I(s)  = e^{2s} T/2 - (mu/p) e^{ptil s} P,
        I'(s) = e^{2s} T   - (mu/p) ptil e^{ptil s} P.
    """
    g = w.grid
    T = g.grad_sq_values(w.values)
    P = g.integrate(np.abs(w.values) ** p)
    ptil = (p / 2.0 - 1.0) * g.N
    val = exp(2.0 * s) * T / 2.0 - (mu / p) * exp(ptil * s) * P
    der = exp(2.0 * s) * T - (mu / p) * ptil * exp(ptil * s) * P
    return val, der


def scalar_energy(w: Profile, mu: float, p: float) -> float:
    g = w.grid
    return 0.5 * g.grad_sq_values(w.values) - (mu / p) * g.integrate(np.abs(w.values) ** p)


def sharp_gn_constant(N: int, p: float) -> float:
    """Sharp constant of ||u||_p <= C ||grad u||^alpha ||u||_2^{1-alpha}.

    The quotient is maximized by the ground state; p=2 collapses to the norm
    identity C=1.
    """
    if p == 2.0:
        return 1.0
    gs = ground_state(N, p)
    al = gn_exponent(N, p)
    return gs.C1 ** (1.0 / p) / (gs.C0 ** (al / 2.0) * gs.M0 ** ((1.0 - al) / 2.0))


def gaussian_gn_quotient(N: int, p: float, width: float = 1.0) -> float:
    """The same quotient on a Gaussian test function; a lower bound on the sharp constant."""
    grid = RadialGrid(N, max(12.0 * width, 12.0), 4096)
    u = gaussian_profile(grid, 1.0, width)
    al = gn_exponent(N, p)
    num = grid.integrate(np.abs(u.values) ** p) ** (1.0 / p)
    den = grid.grad_sq_values(u.values) ** (al / 2.0) * grid.mass_values(u.values) ** ((1.0 - al) / 2.0)
    return num / den
