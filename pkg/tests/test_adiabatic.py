"""Closed-form eigenframe solution: diagonalization, phases, trajectories."""

import math

import numpy as np
import pytest
from scipy.linalg import expm

from dynres import adiabatic, semiclassical
from dynres.params import SystemParams

from conftest import reference_params, toy_params


def test_eigenframe_diagonalizes_generator():
    for omega in (0.0, 0.3, -1.7, 100.0):
        for gam in (0.0, 0.05):
            frame = adiabatic.eigenframe(omega, 1.0, gamma1=gam, gamma2=gam)
            assert adiabatic.verify_diagonalization(frame) < 1e-12


def test_eigenframe_resonance_is_balanced():
    frame = adiabatic.eigenframe(0.0, 2.0)
    assert frame.s == pytest.approx(math.sqrt(0.5))
    assert frame.c == pytest.approx(math.sqrt(0.5))
    assert frame.epsilon == pytest.approx(2.0)


def test_eigenframe_rejects_bad_inputs():
    with pytest.raises(ValueError):
        adiabatic.eigenframe(1.0, 0.0)
    with pytest.raises(ValueError):
        adiabatic.eigenframe(1.0, 1.0, gamma1=0.1, gamma2=0.2)


def test_closed_form_matches_expm_for_frozen_splitting():
    # With omega held fixed the exact propagator is expm(-i M t) and the
    # eigenphase is simply epsilon * t; the closed form must reproduce it.
    rng = np.random.default_rng(7)
    for _ in range(20):
        omega = rng.uniform(-3.0, 3.0)
        g = rng.uniform(0.2, 2.0)
        t = rng.uniform(0.0, 8.0)
        frame = adiabatic.eigenframe(omega, g)
        T = adiabatic.closed_form_T(frame, frame, frame.epsilon * t)
        m = np.array([[omega, g], [g, -omega]])
        exact = expm(-1j * m * t)
        got = np.array([[T.t11, T.t12], [T.t21, T.t22]])
        assert np.max(np.abs(got - exact)) < 1e-12


def test_closed_form_is_unitary():
    f0 = adiabatic.eigenframe(1.5, 1.0)
    ft = adiabatic.eigenframe(-0.4, 1.0)
    for xi in np.linspace(0.0, 20.0, 37):
        T = adiabatic.closed_form_T(f0, ft, xi)
        m = np.array([[T.t11, T.t12], [T.t21, T.t22]])
        assert np.max(np.abs(m.conj().T @ m - np.eye(2))) < 1e-14


def test_t21_magnitude_agrees_with_complex_element():
    f0 = adiabatic.eigenframe(2.0, 1.0)
    ft = adiabatic.eigenframe(0.1, 1.0)
    for xi in np.linspace(0.0, 9.0, 25):
        T = adiabatic.closed_form_T(f0, ft, xi)
        assert adiabatic.t21_magnitude(f0, ft, xi) == pytest.approx(
            abs(T.t21), abs=1e-14
        )


def test_theta_phase_unwraps_continuously():
    f0 = adiabatic.eigenframe(2.0, 1.0)
    xi = np.linspace(0.0, 30.0, 4000)
    frames = [adiabatic.eigenframe(2.0 - 0.1 * x, 1.0) for x in xi]
    theta = adiabatic.theta_phase(f0, frames, xi)
    assert np.max(np.abs(np.diff(theta))) < 0.5 * np.pi
    # spot-check against the raw angle modulo 2 pi
    T = adiabatic.closed_form_T(f0, frames[-1], xi[-1])
    diff = theta[-1] - math.atan2(T.t21.imag, T.t21.real)
    assert abs(diff - 2.0 * np.pi * round(diff / (2.0 * np.pi))) < 1e-9


def test_theta_phase_rejects_sparse_sampling():
    f0 = adiabatic.eigenframe(2.0, 1.0)
    xi = np.linspace(0.0, 30.0, 8)
    frames = [adiabatic.eigenframe(2.0, 1.0) for _ in xi]
    with pytest.raises(ValueError):
        adiabatic.theta_phase(f0, frames, xi)


def test_trajectory_requires_lossless_params():
    p = SystemParams(
        g=1.0, delta_omega=10.0, omega_m=0.05, kappa0=5.0 / 3.0, b0=3.0,
        n_bar=6.0, gamma_m=0.01,
    )
    with pytest.raises(ValueError):
        adiabatic.adiabatic_trajectory(p, 10.0)


def test_trajectory_tracks_direct_integrator_in_adiabatic_regime():
    # Well below threshold and deep in the adiabatic regime the closed form
    # and the direct integrator must agree to the order of the adiabatic
    # parameter.
    p = reference_params(n_ratio=0.4, n_bar=100.0)
    t_end = 2.0 * math.pi / p.omega_m
    t_samples = np.linspace(0.0, t_end, 800)
    closed = adiabatic.adiabatic_trajectory(p, t_end, t_samples=t_samples)
    direct = semiclassical.integrate(p, t_end, t_samples=t_samples)
    assert np.max(np.abs(closed.t21 - direct.t21)) < 5e-4
    assert np.max(np.abs(closed.b - direct.b_values) / p.b0) < 1e-3


def test_trajectory_csv_round_trip(tmp_path):
    p = toy_params()
    sol = adiabatic.adiabatic_trajectory(p, 5.0, t_samples=np.linspace(0, 5, 50))
    path = tmp_path / "closed.csv"
    adiabatic.write_adiabatic_csv(sol, path)
    rows = path.read_text().strip().split("\n")
    assert rows[0] == ",".join(adiabatic.ADIABATIC_CSV_COLUMNS)
    assert len(rows) == 51
