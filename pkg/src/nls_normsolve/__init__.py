"""Normalized solutions of coupled nonlinear Schrodinger systems.

Two positive solutions with prescribed masses: a local minimizer inside an
explicit gradient ball, and a second critical point through a constrained
mountain pass (subcritical self-interaction, supercritical coupling) or a
constrained linking (the reversed regime), plus the rearrangement and
dynamics machinery used to certify them.
"""

from .params import (
    GeometryConstants,
    GNData,
    Params,
    Regime,
    RegimeError,
    classify_regime,
    compute_thresholds,
    gn_exponent,
)
from .radial import Profile, RadialGrid
from .functional import Classification, SolutionRecord, StatePair

__all__ = [
    "Classification",
    "GeometryConstants",
    "GNData",
    "Params",
    "Profile",
    "RadialGrid",
    "Regime",
    "RegimeError",
    "SolutionRecord",
    "StatePair",
    "classify_regime",
    "compute_thresholds",
    "gn_exponent",
]

__version__ = "0.1.0"
