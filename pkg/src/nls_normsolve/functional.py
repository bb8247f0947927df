"""The constrained energy, its gradient, and Pohozaev/multiplier diagnostics.

For a pair (u1, u2) with masses (a1, a2),

    J = 1/2 (||grad u1||^2 + ||grad u2||^2) - sum_i (mu_i/p_i) ||u_i||_{p_i}^{p_i}
        - beta int |u1|^{r1} |u2|^{r2},

and Q is the derivative of J along the mass-preserving dilation at t=1; it
vanishes at every critical point and is the natural coercivity constraint of
the minimax arguments.  The L^2 gradient components are

    g1 = -Delta u1 - mu1 |u1|^{p1-2} u1 - beta r1 |u1|^{r1-2} u1 |u2|^{r2}

(and symmetrically for g2); for 1 < r < 2 the power |u|^{r-2} u is the
continuous extension sign(u) |u|^{r-1}, zero at u=0.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .params import GeometryConstants, Params
from .radial import Profile, RadialGrid


class Classification(enum.Enum):
    LOCAL_MIN = "LocalMin"
    MOUNTAIN_PASS = "MountainPass"
    LINKING = "Linking"


@dataclass
class StatePair:
    u1: Profile
    u2: Profile

    def __post_init__(self):
        if self.u1.grid != self.u2.grid:
            raise ValueError("components must share a grid")

    @property
    def grid(self) -> RadialGrid:
        return self.u1.grid

    def copy(self) -> "StatePair":
        return StatePair(self.u1.copy(), self.u2.copy())

    def kinetic(self) -> float:
        g = self.grid
        return g.grad_sq_values(self.u1.values) + g.grad_sq_values(self.u2.values)

    def masses(self) -> tuple[float, float]:
        g = self.grid
        return g.mass_values(self.u1.values), g.mass_values(self.u2.values)


@dataclass
class SolutionRecord:
    state: StatePair
    lambda1: float
    lambda2: float
    energy: float
    pohozaev_residual: float
    grad_residual: float
    classification: Classification
    params_snapshot: Params
    constants_snapshot: Optional[GeometryConstants] = None
    diagnostics: dict = field(default_factory=dict)


def odd_power(u: np.ndarray, e: float) -> np.ndarray:
    """sign(u) |u|^{e}; continuous at 0 for e > 0."""
    return np.sign(u) * np.abs(u) ** e


def _integrals(state: StatePair, params: Params):
    g = state.grid
    v1, v2 = state.u1.values, state.u2.values
    kin = g.grad_sq_values(v1) + g.grad_sq_values(v2)
    P1 = g.integrate(np.abs(v1) ** params.p1)
    P2 = g.integrate(np.abs(v2) ** params.p2)
    X = g.integrate(np.abs(v1) ** params.r1 * np.abs(v2) ** params.r2)
    return kin, P1, P2, X


def energy(state: StatePair, params: Params) -> float:
    kin, P1, P2, X = _integrals(state, params)
    return 0.5 * kin - params.mu1 / params.p1 * P1 - params.mu2 / params.p2 * P2 - params.beta * X


def pohozaev(state: StatePair, params: Params) -> float:
    """Q(u1,u2): the fibering derivative theta'(1)."""
    kin, P1, P2, X = _integrals(state, params)
    N = params.N
    pt1 = (params.p1 / 2.0 - 1.0) * N
    pt2 = (params.p2 / 2.0 - 1.0) * N
    rt = ((params.r1 + params.r2) / 2.0 - 1.0) * N
    return (
        kin
        - params.mu1 / params.p1 * pt1 * P1
        - params.mu2 / params.p2 * pt2 * P2
        - params.beta * rt * X
    )


def gradient_values(
    state: StatePair, params: Params
) -> tuple[np.ndarray, np.ndarray]:
    """Unconstrained L^2 gradient pair as raw arrays."""
    g = state.grid
    v1, v2 = state.u1.values, state.u2.values
    L = g.neg_laplacian_matrix()
    a1 = np.abs(v1)
    a2 = np.abs(v2)
    f1 = params.mu1 * odd_power(v1, params.p1 - 1.0) + params.beta * params.r1 * odd_power(
        v1, params.r1 - 1.0
    ) * a2**params.r2
    f2 = params.mu2 * odd_power(v2, params.p2 - 1.0) + params.beta * params.r2 * a1**params.r1 * odd_power(
        v2, params.r2 - 1.0
    )
    return L @ v1 - f1, L @ v2 - f2


def gradient(state: StatePair, params: Params) -> StatePair:
    g1, g2 = gradient_values(state, params)
    grid = state.grid
    return StatePair(Profile(grid, g1), Profile(grid, g2))


def lagrange_multipliers(state: StatePair, params: Params) -> tuple[float, float]:
    """Component-wise Rayleigh quotients <g_i, u_i> / ||u_i||_2^2.

    Exact at critical points; at every critical point the combination
    lambda1 a1 + lambda2 a2 is negative.
    """
    g = state.grid
    m1 = g.mass_values(state.u1.values)
    m2 = g.mass_values(state.u2.values)
    if m1 == 0.0 or m2 == 0.0:
        raise ValueError("multipliers undefined for a zero component")
    g1, g2 = gradient_values(state, params)
    lam1 = g.inner(g1, state.u1.values) / m1
    lam2 = g.inner(g2, state.u2.values) / m2
    return lam1, lam2


def residuals(state: StatePair, params: Params) -> tuple[float, float, float, float]:
    """(lambda1, lambda2, grad_residual, pohozaev_residual).

    grad_residual is the L^2 norm of the mass-constraint-projected gradient
    relative to the equation's own scale ||(lambda_1 u_1, lambda_2 u_2)|| (a
    normalization that stays meaningful when the whole energy landscape is
    orders of magnitude below 1, as for very flat local minimizers; the pair
    H^1 norm is the fallback when the multipliers vanish).
    pohozaev_residual is |Q| over the kinetic sum.
    """
    g = state.grid
    v1, v2 = state.u1.values, state.u2.values
    m1, m2 = g.mass_values(v1), g.mass_values(v2)
    g1, g2 = gradient_values(state, params)
    lam1 = g.inner(g1, v1) / m1 if m1 > 0 else 0.0
    lam2 = g.inner(g2, v2) / m2 if m2 > 0 else 0.0
    r1 = g1 - lam1 * v1
    r2 = g2 - lam2 * v2
    kin = state.kinetic()
    scale_sq = lam1**2 * m1 + lam2**2 * m2
    if scale_sq <= 0:
        scale_sq = kin + m1 + m2
    grad_res = np.sqrt((g.mass_values(r1) + g.mass_values(r2)) / scale_sq)
    q_res = abs(pohozaev(state, params)) / kin if kin > 0 else 0.0
    return lam1, lam2, grad_res, q_res


def make_record(
    state: StatePair,
    params: Params,
    classification: Classification,
    constants: Optional[GeometryConstants] = None,
    diagnostics: Optional[dict] = None,
) -> SolutionRecord:
    lam1, lam2, grad_res, q_res = residuals(state, params)
    return SolutionRecord(
        state=state,
        lambda1=lam1,
        lambda2=lam2,
        energy=energy(state, params),
        pohozaev_residual=q_res,
        grad_residual=grad_res,
        classification=classification,
        params_snapshot=params,
        constants_snapshot=constants,
        diagnostics=diagnostics or {},
    )
