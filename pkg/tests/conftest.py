"""Shared fixtures: the expensive certificate solves run once per session.

The two benchmark parameter sets are the ones the acceptance suite pins
down: a subcritical-inside/supercritical-coupling configuration at N=3 with
coupling beta0/2, and the reversed regime at N=3 with coupling
min(beta0, beta1)/2.  Unit tests reuse the same converged records instead of
re-solving.
"""

from __future__ import annotations

import warnings

import numpy as np
import pytest

from nls_normsolve.cli import gn_data_for
from nls_normsolve.descent import SolverOptions, local_minimize
from nls_normsolve.minimax import coupling_threshold, linking_solve, mountain_pass
from nls_normsolve.params import Params, compute_thresholds

warnings.filterwarnings("ignore", message="overflow")


@pytest.fixture(scope="session")
def h0_setup():
    params = Params(N=3, p1=2.5, p2=2.5, r1=2.0, r2=2.0, mu1=1.0, mu2=1.0,
                    beta=0.0, a1=1.0, a2=1.0)
    consts = compute_thresholds(params, gn_data_for(params))
    return params.with_beta(consts.beta0 / 2.0), consts


@pytest.fixture(scope="session")
def h1_setup():
    params = Params(N=3, p1=4.0, p2=4.0, r1=1.4, r2=1.4, mu1=1.0, mu2=1.0,
                    beta=0.0, a1=1.0, a2=1.0)
    consts = compute_thresholds(params, gn_data_for(params))
    beta1, _, _ = coupling_threshold(params)
    return params.with_beta(min(consts.beta0, beta1) / 2.0), consts


@pytest.fixture(scope="session")
def probe_setup():
    """N=1 dynamics probe in the H0 regime (p subcritical, r1+r2 = 6.4 > 6)."""
    params = Params(N=1, p1=3.0, p2=3.0, r1=3.2, r2=3.2, mu1=1.0, mu2=1.0,
                    beta=0.0, a1=1.0, a2=1.0)
    consts = compute_thresholds(params, gn_data_for(params))
    return params.with_beta(consts.beta0 / 2.0), consts


@pytest.fixture(scope="session")
def h0_local(h0_setup):
    params, consts = h0_setup
    return local_minimize(params, consts, options=SolverOptions(grid_n=4096))


@pytest.fixture(scope="session")
def h0_mp(h0_setup, h0_local):
    params, consts = h0_setup
    return mountain_pass(params, consts, h0_local, options=SolverOptions(grid_n=4096))


@pytest.fixture(scope="session")
def h1_local(h1_setup):
    params, consts = h1_setup
    return local_minimize(params, consts, options=SolverOptions(grid_n=4096))


@pytest.fixture(scope="session")
def h1_link(h1_setup):
    params, consts = h1_setup
    return linking_solve(params, consts, options=SolverOptions(grid_n=4096), K=9, sweeps=3)


@pytest.fixture(scope="session")
def probe_local(probe_setup):
    params, consts = probe_setup
    return local_minimize(params, consts, options=SolverOptions(grid_n=4096))
