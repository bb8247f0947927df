"""Fibering (dilation) map of a fixed pair and its stationary structure.

Along the mass-preserving dilation the energy is the explicit power sum

    theta(t) = a t^2/2 - b1 t^{pt1} - b2 t^{pt2} - c t^{rt},

with a the kinetic sum, b_i = (mu_i/p_i) ||u_i||_{p_i}^{p_i}, c = beta times
the cross integral, and exponents pt_i = (p_i/2 - 1) N, rt = ((r1+r2)/2-1) N.
Stationary points are zeros of psi(t) = theta'(t)/t.  When all coefficients
are positive and pt_i < 2 < rt (the subcritical-inside/supercritical-outside
regime), psi increases to a unique maximum and then decreases, so theta has
at most two stationary points; the counting below exploits that shape while
the dense-grid oracle stays available as an independent check.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .functional import StatePair, energy
from .params import Params


@dataclass
class DilationCurve:
    coeff_a: float
    coeff_b1: float
    coeff_b2: float
    coeff_c: float
    exp_p1: float  # pt1
    exp_p2: float  # pt2
    exp_r: float   # rt
    samples: np.ndarray = field(repr=False)  # (n, 2) columns t, theta(t)
    stationary_points: list = field(default_factory=list)  # (t, "min"|"max")

    def theta(self, t):
        t = np.asarray(t, dtype=float)
        return (
            0.5 * self.coeff_a * t**2
            - self.coeff_b1 * t**self.exp_p1
            - self.coeff_b2 * t**self.exp_p2
            - self.coeff_c * t**self.exp_r
        )

    def theta_prime(self, t):
        t = np.asarray(t, dtype=float)
        return (
            self.coeff_a * t
            - self.coeff_b1 * self.exp_p1 * t ** (self.exp_p1 - 1.0)
            - self.coeff_b2 * self.exp_p2 * t ** (self.exp_p2 - 1.0)
            - self.coeff_c * self.exp_r * t ** (self.exp_r - 1.0)
        )

    def psi(self, t):
        """theta'(t)/t; same zeros on t > 0."""
        t = np.asarray(t, dtype=float)
        return (
            self.coeff_a
            - self.coeff_b1 * self.exp_p1 * t ** (self.exp_p1 - 2.0)
            - self.coeff_b2 * self.exp_p2 * t ** (self.exp_p2 - 2.0)
            - self.coeff_c * self.exp_r * t ** (self.exp_r - 2.0)
        )


def dilation_exponents(params: Params) -> tuple[float, float, float]:
    N = params.N
    return (
        (params.p1 / 2.0 - 1.0) * N,
        (params.p2 / 2.0 - 1.0) * N,
        ((params.r1 + params.r2) / 2.0 - 1.0) * N,
    )


def curve_from_coefficients(
    a: float,
    b1: float,
    b2: float,
    c: float,
    exps: tuple[float, float, float],
    t_lo: float = 1e-3,
    t_hi: float = 1e3,
    n_samples: int = 400,
    n_dense: int = 200001,
) -> DilationCurve:
    curve = DilationCurve(
        coeff_a=a, coeff_b1=b1, coeff_b2=b2, coeff_c=c,
        exp_p1=exps[0], exp_p2=exps[1], exp_r=exps[2],
        samples=np.empty((0, 2)),
    )
    ts = np.geomspace(t_lo, t_hi, n_samples)
    curve.samples = np.column_stack([ts, curve.theta(ts)])
    curve.stationary_points = _stationary_points(curve, t_lo, t_hi, n_dense)
    return curve


def fibering_curve(
    state: StatePair,
    params: Params,
    t_lo: float = 1e-3,
    t_hi: float = 1e3,
    n_samples: int = 400,
) -> DilationCurve:
    """Extract the five integrals of a pair and analyse its dilation energy."""
    g = state.grid
    v1, v2 = state.u1.values, state.u2.values
    kin = g.grad_sq_values(v1) + g.grad_sq_values(v2)
    if kin == 0.0:
        raise ValueError("fibering map of the zero state is degenerate")
    b1 = params.mu1 / params.p1 * g.integrate(np.abs(v1) ** params.p1)
    b2 = params.mu2 / params.p2 * g.integrate(np.abs(v2) ** params.p2)
    c = params.beta * g.integrate(np.abs(v1) ** params.r1 * np.abs(v2) ** params.r2)
    return curve_from_coefficients(kin, b1, b2, c, dilation_exponents(params), t_lo, t_hi, n_samples)


def _bisect_root(f, lo: float, hi: float, rel_tol: float = 1e-10) -> float:
    flo = f(lo)
    for _ in range(200):
        if hi - lo <= rel_tol * hi:
            break
        mid = 0.5 * (lo + hi)
        if (f(mid) > 0) == (flo > 0):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _stationary_points(curve: DilationCurve, t_lo: float, t_hi: float, n_dense: int) -> list:
    """Sign changes of psi on a dense log grid, bisected to relative 1e-10.

    The grid is thickened near the maximizer of psi so that a near-double
    root (the geometry that could hide a pair of sign changes) is resolved.
    """
    ts = np.geomspace(t_lo, t_hi, n_dense)
    vals = curve.psi(ts)
    # thicken around the sampled argmax
    k = int(np.argmax(vals))
    lo_k = ts[max(k - 2, 0)]
    hi_k = ts[min(k + 2, n_dense - 1)]
    extra = np.geomspace(lo_k, hi_k, 4001)
    ts = np.unique(np.concatenate([ts, extra]))
    vals = curve.psi(ts)
    sign = np.sign(vals)
    idx = np.nonzero(sign[:-1] * sign[1:] < 0)[0]
    roots = [_bisect_root(curve.psi, ts[i], ts[i + 1]) for i in idx]
    # exact-zero grid hits (measure zero; keep for completeness)
    for i in np.nonzero(vals == 0.0)[0]:
        if 0 < i < len(ts) - 1:
            roots.append(float(ts[i]))
    out = []
    for t in sorted(roots):
        slope = curve.psi(t * (1 + 1e-7)) - curve.psi(t * (1 - 1e-7))
        out.append((float(t), "min" if slope > 0 else "max"))
    return out


def count_stationary_batch(
    a: np.ndarray,
    b1: np.ndarray,
    b2: np.ndarray,
    c: np.ndarray,
    pt1: np.ndarray,
    pt2: np.ndarray,
    rt: np.ndarray,
    t_lo: float = 1e-3,
    t_hi: float = 1e3,
    n_grid: int = 100001,
    chunk: int = 64,
) -> np.ndarray:
    """Dense-grid sign-change count of theta' for batches of coefficient draws.

    Vectorized over draws in chunks; each draw additionally gets a refinement
    pass of the same density around its sampled psi-argmax, so a close root
    pair straddling one coarse cell is still seen.  Returns the count per draw.
    """
    a, b1, b2, c = map(np.atleast_1d, (a, b1, b2, c))
    pt1, pt2, rt = map(np.atleast_1d, (pt1, pt2, rt))
    m = len(a)
    counts = np.zeros(m, dtype=int)
    logt = np.linspace(np.log(t_lo), np.log(t_hi), n_grid)
    for start in range(0, m, chunk):
        sl = slice(start, min(start + chunk, m))
        A = a[sl][:, None]
        B1 = (b1[sl] * pt1[sl])[:, None]
        B2 = (b2[sl] * pt2[sl])[:, None]
        C = (c[sl] * rt[sl])[:, None]
        E1 = (pt1[sl] - 2.0)[:, None]
        E2 = (pt2[sl] - 2.0)[:, None]
        ER = (rt[sl] - 2.0)[:, None]

        def psi_of(logts):
            return A - B1 * np.exp(E1 * logts) - B2 * np.exp(E2 * logts) - C * np.exp(ER * logts)

        vals = psi_of(logt[None, :])
        sgn = np.sign(vals)
        n_coarse = np.sum(sgn[:, :-1] * sgn[:, 1:] < 0, axis=1)
        # refine around the argmax of psi, where a hidden pair would live
        kmax = np.argmax(vals, axis=1)
        lo_i = np.clip(kmax - 1, 0, n_grid - 1)
        hi_i = np.clip(kmax + 1, 0, n_grid - 1)
        width = logt[hi_i] - logt[lo_i]
        fine = logt[lo_i][:, None] + width[:, None] * np.linspace(0.0, 1.0, 2001)[None, :]
        fvals = psi_of(fine)
        fsgn = np.sign(fvals)
        n_fine = np.sum(fsgn[:, :-1] * fsgn[:, 1:] < 0, axis=1)
        coarse_in_window = np.zeros_like(n_coarse)
        for j in range(vals.shape[0]):
            w0, w1 = lo_i[j], hi_i[j]
            coarse_in_window[j] = np.sum(
                sgn[j, w0:w1] * sgn[j, w0 + 1 : w1 + 1] < 0
            )
        counts[sl] = n_coarse - coarse_in_window + n_fine
    return counts
