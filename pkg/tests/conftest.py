import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dynres import fock_oracle, semiclassical
from dynres.params import from_dimensionless
from dynres.states import Fock

REFERENCE_RATIOS = {"g": 1.0, "r_wc": 1e-2, "r_sm": 1e-3}


def reference_params(n_ratio=5.0, n_bar=100.0, **kw):
    return from_dimensionless(n_ratio=n_ratio, n_bar=n_bar, **REFERENCE_RATIOS, **kw)


def toy_params(n_bar=6.0, n_ratio=3.0):
    return from_dimensionless(g=1.0, r_wc=0.1, r_sm=0.05, n_ratio=n_ratio, n_bar=n_bar)


def first_crossing_estimate(p):
    """Undepleted-orbit crossing time: cos(omega_m t) = 1 - 2 n_thr/n_bar."""
    from dynres.params import n_threshold

    return math.acos(1.0 - 2.0 * n_threshold(p) / p.n_bar) / p.omega_m


@pytest.fixture(scope="session")
def reference_trajectory():
    """Transfer run at the headline parameters over twice the crossing time,
    with the wall-clock cost recorded (the runtime gate reads it)."""
    p = reference_params()
    t_star = first_crossing_estimate(p)
    t_samples = np.linspace(0.0, 2.0 * t_star, 4000)
    start = time.perf_counter()
    traj = semiclassical.integrate(p, t_samples[-1], t_samples=t_samples)
    elapsed = time.perf_counter() - start
    return traj, t_star, elapsed


@pytest.fixture(scope="session")
def oracle_series():
    """Exact-vs-mean-field comparison at toy scale for growing photon number."""
    reports = {}
    start = time.perf_counter()
    for n in (4, 6, 8):
        p = toy_params(n_bar=float(n))
        reports[n] = fock_oracle.compare_with_semiclassical(
            p, Fock(n), 40.0, n_times=40
        )
    elapsed = time.perf_counter() - start
    return reports, elapsed
