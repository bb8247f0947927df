"""Problem data, hypothesis regimes and the explicit smallness thresholds.

The system couples two unknown profiles through exponents (p1, p2) for the
self-interaction and (r1, r2) for the cross term.  Two exponent regimes
admit the two-solution structure:

* ``H0``: both p_i mass-subcritical (p_i < 2 + 4/N) while the cross term is
  supercritical (2 + 4/N < r1 + r2 < 2*);
* ``H1``: both p_i mass-supercritical while the cross term is subcritical
  (r1 + r2 < 2 + 4/N).

``compute_thresholds`` turns Gagliardo-Nirenberg data into the radius
rho0 of the gradient ball and the largest admissible coupling beta0 for
which the energy is >= rho0/4 on the annulus between the balls of radius
rho0 and 2 rho0 (meant in the gradient norm), uniformly over masses below
(a1, a2).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from math import gamma, inf, pi, sqrt


class Regime(enum.Enum):
    H0 = "H0"
    H1 = "H1"
    OTHER = "Other"


class RegimeError(ValueError):
    """Raised when a task requires regime H0 or H1 but the parameters match neither."""


def critical_exponent(N: int) -> float:
    """Sobolev-critical exponent 2* (infinite for N = 1, 2)."""
    return 2.0 * N / (N - 2.0) if N >= 3 else inf


def mass_critical_exponent(N: int) -> float:
    return 2.0 + 4.0 / N


@dataclass(frozen=True)
class Params:
    """Problem data; all exponent bounds are strict."""

    N: int
    p1: float
    p2: float
    r1: float
    r2: float
    mu1: float
    mu2: float
    beta: float
    a1: float
    a2: float

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.N}")
        two_star = critical_exponent(self.N)
        for name, p in (("p1", self.p1), ("p2", self.p2)):
            if not (2.0 < p < two_star):
                raise ValueError(f"{name}={p} outside (2, 2*) for N={self.N}")
        for name, r in (("r1", self.r1), ("r2", self.r2)):
            if r <= 1.0:
                raise ValueError(f"{name}={r} must exceed 1")
        if not (self.r1 + self.r2 < two_star):
            raise ValueError(f"r1+r2={self.r1 + self.r2} must be below 2* for N={self.N}")
        for name, v in (("mu1", self.mu1), ("mu2", self.mu2), ("a1", self.a1), ("a2", self.a2)):
            if v <= 0.0:
                raise ValueError(f"{name}={v} must be positive")
        # beta = 0 is accepted so decoupled diagnostics can run; negative coupling is out of scope
        if self.beta < 0.0:
            raise ValueError(f"beta={self.beta} must be nonnegative")

    @property
    def regime(self) -> Regime:
        return classify_regime(self)

    def with_masses(self, a1: float, a2: float) -> "Params":
        return replace(self, a1=a1, a2=a2)

    def with_beta(self, beta: float) -> "Params":
        return replace(self, beta=beta)


def classify_regime(params: Params) -> Regime:
    """Exactly one of H0 / H1 / Other (the H blocks are mutually exclusive)."""
    pc = mass_critical_exponent(params.N)
    two_star = critical_exponent(params.N)
    s = params.r1 + params.r2
    if params.p1 < pc and params.p2 < pc and pc < s < two_star:
        return Regime.H0
    if params.p1 > pc and params.p2 > pc and s < pc:
        return Regime.H1
    return Regime.OTHER


def gn_exponent(N: int, p: float) -> float:
    """Interpolation exponent alpha(p) = N(p-2)/(2p) of the L^p bound."""
    if not (2.0 <= p <= critical_exponent(N)):
        raise ValueError(f"p={p} outside [2, 2*] for N={N}")
    return N * (p - 2.0) / (2.0 * p)


@dataclass(frozen=True)
class GNData:
    """Interpolation constants consumed by the threshold computation.

    ``C_p1``, ``C_p2`` bound ||u||_{p_i}; ``C_cross`` bounds the L^{r1+r2}
    norm entering the cross term after the Hoelder split with
    q = (r1+r2)/r1 (both mixed norms then collapse to L^{r1+r2}).
    """

    C_p1: float
    C_p2: float
    C_cross: float
    source: str = "ground-state"


@dataclass(frozen=True)
class GeometryConstants:
    rho0: float
    beta0: float
    K1: float
    K2: float
    K3: float
    gn_alpha_p1: float
    gn_alpha_p2: float
    gn_C_p1: float
    gn_C_p2: float
    gn_C_cross: float
    holder_q: float
    regime: Regime = field(default=Regime.OTHER)

    def __post_init__(self):
        for name in ("rho0", "beta0", "K1", "K2", "K3"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.holder_q <= 1:
            raise ValueError("holder exponent must exceed 1")


def sobolev_constant(N: int) -> float:
    """Sharp constant in ||u||_{2*} <= S_N ||grad u||_2 for N >= 3."""
    if N < 3:
        raise ValueError("Sobolev endpoint needs N >= 3")
    return 1.0 / sqrt(N * (N - 2) * pi) * (gamma(N) / gamma(N / 2.0)) ** (1.0 / N)


def conservative_gn_bound(N: int, p: float) -> float:
    """Closed-form upper bound on the sharp interpolation constant.

    Fallback for when no ground-state solve is available.  A larger constant
    only shrinks beta0, so every guarantee derived from it stays valid.
    N=1 uses ||u||_inf^2 <= ||u|| ||u'||; N>=3 interpolates against the sharp
    Sobolev endpoint; N=2 descends from the W^{1,1} embedding
    ||v||_2 <= ||grad v||_1/(2 sqrt(pi)) applied to v = |u|^{p/2} and, below
    p=4, interpolates against that bound at p=4.
    """
    if not (2.0 <= p < critical_exponent(N)):
        raise ValueError(f"p={p} outside [2, 2*) for N={N}")
    if p == 2.0:
        return 1.0
    if N == 1:
        return 1.0
    if N >= 3:
        return sobolev_constant(N) ** gn_exponent(N, p)
    # N == 2: ||u||_p^{p/2} <= p/(4 sqrt(pi)) ||grad u||_2 ||u||_{p-2}^{(p-2)/2},
    # with the lower norm closed recursively (exponents recombine to alpha(p))
    if p >= 4.0:
        C_lower = conservative_gn_bound(2, p - 2.0) if p > 4.0 else 1.0
        return (p / (4.0 * sqrt(pi)) * C_lower ** ((p - 2.0) / 2.0)) ** (2.0 / p)
    # 2 < p < 4: interpolate between L^2 and the p=4 instance above
    theta = 2.0 * (p - 2.0) / p  # weight of the L^4 factor
    return (pi**-0.25) ** theta


def _bisect_increasing(f, lo: float, hi: float, rel_tol: float = 1e-12) -> float:
    """Root of a monotone increasing f with f(lo) < 0 < f(hi)."""
    flo, fhi = f(lo), f(hi)
    if flo > 0 or fhi < 0:
        raise ValueError("bracket does not straddle the root")
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def compute_thresholds(params: Params, gn: GNData) -> GeometryConstants:
    """Ball radius rho0 and coupling bound beta0 with the binding relation tight.

    Writing n_i = N(p_i-2)/4 and n_r = N(r1+r2-2)/4, the energy on the mass
    shells is bounded below by rho/2 - K1 rho^{n1} - K2 rho^{n2}
    - beta K3 rho^{n_r}.  Under H0 (n_i < 1 < n_r) rho0 is the smallest
    radius with K1 rho^{n1-1} + K2 rho^{n2-1} = 1/8 and beta0 saturates
    beta K3 (2 rho0)^{n_r-1} = 1/8; under H1 the roles of the exponents
    (and of rho0 vs 2 rho0) swap.
    """
    regime = classify_regime(params)
    if regime is Regime.OTHER:
        raise RegimeError("thresholds are defined only for regimes H0 and H1")
    if gn is None:
        raise ValueError("Gagliardo-Nirenberg data required")
    N = params.N
    s = params.r1 + params.r2
    q = s / params.r1  # r1*q = r2*q' = r1+r2
    a1, a2 = params.a1, params.a2
    al1, al2, als = gn_exponent(N, params.p1), gn_exponent(N, params.p2), gn_exponent(N, s)

    # constants of the rho-powers; the GN constant enters to the power of the norm it bounds
    K1 = params.mu1 / params.p1 * gn.C_p1**params.p1 * a1 ** ((1 - al1) * params.p1 / 2.0)
    K2 = params.mu2 / params.p2 * gn.C_p2**params.p2 * a2 ** ((1 - al2) * params.p2 / 2.0)
    K3 = gn.C_cross**s * a1 ** ((1 - als) * params.r1 / 2.0) * a2 ** ((1 - als) * params.r2 / 2.0)

    n1 = N * (params.p1 - 2.0) / 4.0
    n2 = N * (params.p2 - 2.0) / 4.0
    nr = N * (s - 2.0) / 4.0

    if regime is Regime.H0:
        # K1 rho^{n1-1} + K2 rho^{n2-1} decreasing in rho (n_i < 1): smallest root
        def gap(rho):
            return 0.125 - (K1 * rho ** (n1 - 1.0) + K2 * rho ** (n2 - 1.0))

        lo = hi = 1.0
        while gap(hi) < 0:
            hi *= 2.0
        while gap(lo) > 0:
            lo *= 0.5
        rho0 = _bisect_increasing(gap, lo, hi)
        beta0 = 0.125 / (K3 * (2.0 * rho0) ** (nr - 1.0))
    else:
        # K1 (2 rho)^{n1-1} + K2 (2 rho)^{n2-1} increasing in rho (n_i > 1): largest root
        def gap(rho):
            return (K1 * (2 * rho) ** (n1 - 1.0) + K2 * (2 * rho) ** (n2 - 1.0)) - 0.125

        lo = hi = 1.0
        while gap(hi) < 0:
            hi *= 2.0
        while gap(lo) > 0:
            lo *= 0.5
        rho0 = _bisect_increasing(gap, lo, hi)
        beta0 = 0.125 / (K3 * rho0 ** (nr - 1.0))

    return GeometryConstants(
        rho0=rho0,
        beta0=beta0,
        K1=K1,
        K2=K2,
        K3=K3,
        gn_alpha_p1=al1,
        gn_alpha_p2=al2,
        gn_C_p1=gn.C_p1,
        gn_C_p2=gn.C_p2,
        gn_C_cross=gn.C_cross,
        holder_q=q,
        regime=regime,
    )


def annulus_lower_bound(params: Params, consts: GeometryConstants, rho: float) -> float:
    """The certified lower bound on the energy at gradient level rho, masses <= (a1, a2)."""
    N, s = params.N, params.r1 + params.r2
    n1 = N * (params.p1 - 2.0) / 4.0
    n2 = N * (params.p2 - 2.0) / 4.0
    nr = N * (s - 2.0) / 4.0
    return (
        0.5 * rho
        - consts.K1 * rho**n1
        - consts.K2 * rho**n2
        - params.beta * consts.K3 * rho**nr
    )
